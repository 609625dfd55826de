#include "localregret/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "localregret/errors.hpp"

namespace localregret {

LossConstants LossConstants::envelope(const LossConstants& a, const LossConstants& b) {
  LossConstants out;
  out.bound = std::max(a.bound, b.bound);
  out.lipschitz = std::max(a.lipschitz, b.lipschitz);
  out.smoothness = std::max(a.smoothness, b.smoothness);
  if (a.hessian_lipschitz && b.hessian_lipschitz) {
    out.hessian_lipschitz = std::max(*a.hessian_lipschitz, *b.hessian_lipschitz);
  }
  out.domain_radius = std::min(a.domain_radius, b.domain_radius);
  return out;
}

OracleCounters& OracleCounters::operator+=(const OracleCounters& other) noexcept {
  value += other.value;
  gradient += other.gradient;
  hessian += other.hessian;
  stochastic += other.stochastic;
  return *this;
}

// ---------------------------------------------------------------------------
// LossFunction

LossFunction::LossFunction(int dim, ValueFn value, GradientFn gradient, LossConstants constants,
                           HessianFn hessian, std::string name) {
  if (dim < 1) throw ArgumentError("loss dimension must be >= 1");
  if (!value || !gradient) throw ArgumentError("loss needs value and gradient oracles");
  if (constants.bound < 0 || constants.lipschitz < 0 || constants.smoothness < 0 ||
      (constants.hessian_lipschitz && *constants.hessian_lipschitz < 0)) {
    throw ArgumentError("loss constants must be non-negative");
  }
  auto impl = std::make_shared<Impl>();
  impl->dim = dim;
  impl->value = std::move(value);
  impl->gradient = std::move(gradient);
  impl->hessian = std::move(hessian);
  impl->constants = constants;
  impl->name = std::move(name);
  impl_ = std::move(impl);
}

LossFunction LossFunction::zero(int dim) {
  LossConstants c;
  c.hessian_lipschitz = 0.0;
  LossFunction f(
      dim, [](const Vector&) { return 0.0; },
      [dim](const Vector&) { return Vector::Zero(dim).eval(); }, c,
      [dim](const Vector&) { return Matrix::Zero(dim, dim).eval(); }, "zero");
  auto impl = std::make_shared<Impl>(*f.impl_);
  impl->is_zero = true;
  return LossFunction(std::move(impl));
}

void LossFunction::check_dim(const Vector& x) const {
  if (x.size() != impl_->dim) {
    std::ostringstream os;
    os << "dimension mismatch: loss '" << impl_->name << "' has dimension " << impl_->dim
       << ", point has " << x.size();
    throw ArgumentError(os.str());
  }
}

double LossFunction::value(const Vector& x) const {
  check_dim(x);
  return impl_->value(x);
}

Vector LossFunction::gradient(const Vector& x) const {
  check_dim(x);
  return impl_->gradient(x);
}

Matrix LossFunction::hessian(const Vector& x) const {
  check_dim(x);
  if (!impl_->hessian) throw ArgumentError("loss '" + impl_->name + "' has no Hessian oracle");
  return impl_->hessian(x);
}

LossFunction LossFunction::negated() const {
  auto base = impl_;
  HessianFn hess;
  if (base->hessian) {
    hess = [base](const Vector& x) { return (-base->hessian(x)).eval(); };
  }
  auto impl = std::make_shared<Impl>();
  impl->dim = base->dim;
  impl->value = [base](const Vector& x) { return -base->value(x); };
  impl->gradient = [base](const Vector& x) { return (-base->gradient(x)).eval(); };
  impl->hessian = std::move(hess);
  impl->constants = base->constants;
  impl->name = "-" + base->name;
  impl->is_zero = base->is_zero;
  return LossFunction(std::move(impl));
}

// ---------------------------------------------------------------------------
// WindowAverage

WindowAverage::WindowAverage(int window, int dim) : window_(window), dim_(dim) {
  if (window < 1) throw ArgumentError("window must be >= 1");
  if (dim < 1) throw ArgumentError("window dimension must be >= 1");
}

const LossFunction& WindowAverage::latest() const {
  if (buffer_.empty()) throw ArgumentError("window is empty");
  return buffer_.back();
}

const LossFunction& WindowAverage::member(std::size_t lag) const {
  if (lag >= buffer_.size()) throw ArgumentError("window lag out of range");
  return buffer_[buffer_.size() - 1 - lag];
}

void WindowAverage::push(LossFunction f) {
  if (f.dim() != dim_) {
    std::ostringstream os;
    os << "window_push: loss dimension " << f.dim() << " differs from window dimension " << dim_;
    throw ArgumentError(os.str());
  }
  buffer_.push_back(std::move(f));
  if (buffer_.size() > static_cast<std::size_t>(window_)) buffer_.pop_front();
  ++round_;
}

WindowAverage window_push(WindowAverage wa, LossFunction f) {
  wa.push(std::move(f));
  return wa;
}

void WindowAverage::check_dim(const Vector& x) const {
  if (x.size() != dim_) throw ArgumentError("dimension mismatch in window evaluation");
}

double WindowAverage::value(const Vector& x, OracleCounters* counters) const {
  check_dim(x);
  double sum = 0.0;
  for (const auto& f : buffer_) sum += f.value(x);
  if (counters) counters->value += buffer_.size();
  return sum / window_;
}

Vector WindowAverage::gradient(const Vector& x, OracleCounters* counters) const {
  check_dim(x);
  Vector sum = Vector::Zero(dim_);
  for (const auto& f : buffer_) sum += f.gradient(x);
  if (counters) counters->gradient += buffer_.size();
  return sum / window_;
}

bool WindowAverage::has_hessian() const noexcept {
  return std::all_of(buffer_.begin(), buffer_.end(),
                     [](const LossFunction& f) { return f.has_hessian(); });
}

std::optional<Matrix> WindowAverage::hessian(const Vector& x, OracleCounters* counters) const {
  check_dim(x);
  if (!has_hessian()) return std::nullopt;
  Matrix sum = Matrix::Zero(dim_, dim_);
  for (const auto& f : buffer_) sum += f.hessian(x);
  if (counters) counters->hessian += buffer_.size();
  return Matrix(sum / window_);
}

WindowAverage::Evaluation WindowAverage::evaluate(const Vector& x, OracleCounters* counters) const {
  return {value(x, counters), gradient(x, counters), hessian(x, counters)};
}

LossConstants WindowAverage::constants() const {
  LossConstants out;
  out.hessian_lipschitz = 0.0;
  for (const auto& f : buffer_) out = LossConstants::envelope(out, f.constants());
  return out;
}

// ---------------------------------------------------------------------------
// StochasticGradientOracle

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

StochasticGradientOracle::StochasticGradientOracle(LossFunction base, double sigma,
                                                   std::uint64_t seed)
    : base_(std::move(base)), sigma_(sigma), seed_(seed), rng_(seed) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ArgumentError("sigma must be >= 0");
}

Vector StochasticGradientOracle::sample(const Vector& x) {
  Vector g = base_.gradient(x);
  ++samples_;
  if (sigma_ == 0.0) return g;
  const double scale = sigma_ / std::sqrt(static_cast<double>(g.size()));
  for (Eigen::Index i = 0; i < g.size(); ++i) g[i] += scale * normal_(rng_);
  return g;
}

StochasticGradientOracle StochasticGradientOracle::fork(std::uint64_t stream) const {
  return StochasticGradientOracle(base_, sigma_, mix_seed(seed_, stream));
}

// ---------------------------------------------------------------------------
// Built-in catalog

namespace {

double param(std::span<const double> p, std::size_t i, double fallback) {
  return i < p.size() ? p[i] : fallback;
}

// Either absent (fallback broadcast), one value (broadcast) or n values.
Vector vector_param(std::span<const double> p, std::size_t offset, int n, double fallback,
                    std::string_view name) {
  const std::size_t rest = p.size() > offset ? p.size() - offset : 0;
  if (rest == 0) return Vector::Constant(n, fallback);
  if (rest == 1) return Vector::Constant(n, p[offset]);
  if (rest == static_cast<std::size_t>(n)) {
    return Eigen::Map<const Vector>(p.data() + offset, n);
  }
  std::ostringstream os;
  os << name << ": expected 0, 1 or n = " << n << " trailing parameters, got " << rest;
  throw ArgumentError(os.str());
}

void max_params(std::span<const double> p, std::size_t count, std::string_view name) {
  if (p.size() > count) {
    std::ostringstream os;
    os << name << " takes at most " << count << " parameters, got " << p.size();
    throw ArgumentError(os.str());
  }
}

std::string label(std::string_view name, std::span<const double> p) {
  std::ostringstream os;
  os << name << '(';
  for (std::size_t i = 0; i < p.size(); ++i) os << (i ? "," : "") << p[i];
  os << ')';
  return os.str();
}

LossFunction make_quadratic(double sign, std::span<const double> p, int n, double radius,
                            std::string_view name) {
  const double a = param(p, 0, 1.0);
  if (!(a >= 0.0)) throw ArgumentError(std::string(name) + ": a must be >= 0");
  const Vector c = vector_param(p, 1, n, 0.0, name);
  const Vector reach = (c.array().abs() + radius).matrix();

  LossConstants k;
  k.bound = a * reach.squaredNorm();
  k.lipschitz = 2.0 * a * reach.norm();
  k.smoothness = 2.0 * a;
  k.hessian_lipschitz = 0.0;
  k.domain_radius = radius;
  const double s = sign * a;
  return LossFunction(
      n, [s, c](const Vector& x) { return s * (x - c).squaredNorm(); },
      [s, c](const Vector& x) { return (2.0 * s * (x - c)).eval(); }, k,
      [s, n](const Vector&) { return (2.0 * s * Matrix::Identity(n, n)).eval(); },
      label(name, p));
}

LossFunction make_linear(std::span<const double> p, int n, double radius) {
  const Vector c = vector_param(p, 0, n, 1.0, "linear");
  LossConstants k;
  k.bound = radius * c.lpNorm<1>();
  k.lipschitz = c.norm();
  k.smoothness = 0.0;
  k.hessian_lipschitz = 0.0;
  k.domain_radius = radius;
  return LossFunction(
      n, [c](const Vector& x) { return c.dot(x); }, [c](const Vector&) { return c; }, k,
      [n](const Vector&) { return Matrix::Zero(n, n).eval(); }, label("linear", p));
}

LossFunction make_sine_mix(std::span<const double> p, int n, double radius) {
  max_params(p, 3, "sine_mix");
  const double k = param(p, 0, 1.0);
  const double q = param(p, 1, 0.0);
  const double phi = param(p, 2, 0.0);
  if (!(k > 0.0)) throw ArgumentError("sine_mix: k must be > 0");
  const double dn = n;

  LossConstants c;
  c.bound = dn * (1.0 + 0.5 * std::abs(q) * radius * radius);
  c.lipschitz = std::sqrt(dn) * (k + std::abs(q) * radius);
  c.smoothness = k * k + std::abs(q);
  c.hessian_lipschitz = k * k * k;
  if (q == 0.0) {
    c.bound = dn;
    c.lipschitz = std::sqrt(dn) * k;
  } else {
    c.domain_radius = radius;
  }
  return LossFunction(
      n,
      [k, q, phi](const Vector& x) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < x.size(); ++i) s += std::sin(k * x[i] + phi) + 0.5 * q * x[i] * x[i];
        return s;
      },
      [k, q, phi](const Vector& x) {
        Vector g(x.size());
        for (Eigen::Index i = 0; i < x.size(); ++i) g[i] = k * std::cos(k * x[i] + phi) + q * x[i];
        return g;
      },
      c,
      [k, q, phi](const Vector& x) {
        Matrix h = Matrix::Zero(x.size(), x.size());
        for (Eigen::Index i = 0; i < x.size(); ++i) h(i, i) = -k * k * std::sin(k * x[i] + phi) + q;
        return h;
      },
      label("sine_mix", p));
}

LossFunction make_rastrigin(std::span<const double> p, int n, double radius) {
  max_params(p, 2, "rastrigin_smooth");
  const double A = param(p, 0, 0.5);
  const double w = param(p, 1, std::numbers::pi);
  if (!(A >= 0.0) || !(w > 0.0)) throw ArgumentError("rastrigin_smooth: need A >= 0, w > 0");
  const double dn = n;
  LossConstants c;
  c.bound = dn * (radius * radius + 2.0 * A);
  c.lipschitz = std::sqrt(dn) * (2.0 * radius + A * w);
  c.smoothness = 2.0 + A * w * w;
  c.hessian_lipschitz = A * w * w * w;
  c.domain_radius = radius;
  return LossFunction(
      n,
      [A, w](const Vector& x) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < x.size(); ++i) s += x[i] * x[i] + A * (1.0 - std::cos(w * x[i]));
        return s;
      },
      [A, w](const Vector& x) {
        Vector g(x.size());
        for (Eigen::Index i = 0; i < x.size(); ++i) g[i] = 2.0 * x[i] + A * w * std::sin(w * x[i]);
        return g;
      },
      c,
      [A, w](const Vector& x) {
        Matrix h = Matrix::Zero(x.size(), x.size());
        for (Eigen::Index i = 0; i < x.size(); ++i) h(i, i) = 2.0 + A * w * w * std::cos(w * x[i]);
        return h;
      },
      label("rastrigin_smooth", p));
}

LossFunction make_hidden_valley(std::span<const double> p, int n, double radius) {
  const double slope = param(p, 0, 1.0);
  const double depth = param(p, 1, 1.0);
  const double width = param(p, 2, 0.1);
  if (!(depth >= 0.0) || !(width > 0.0)) {
    throw ArgumentError("hidden_valley_demo: need depth >= 0, width > 0");
  }
  const Vector center = vector_param(p, 3, n, 0.5, "hidden_valley_demo");
  const double dn = n;
  // Sup of |d^k/du^k exp(-u^2/2)| for k = 1, 2, 3.
  const double d1 = std::exp(-0.5);
  const double d2 = 1.0;
  const double u3 = std::sqrt(3.0 - std::sqrt(6.0));
  const double d3 = u3 * (3.0 - u3 * u3) * std::exp(-0.5 * u3 * u3);

  LossConstants c;
  c.bound = std::abs(slope) * dn * radius + depth;
  c.lipschitz = std::abs(slope) * std::sqrt(dn) + depth * d1 / width;
  c.smoothness = depth * d2 / (width * width);
  c.hessian_lipschitz = depth * d3 / (width * width * width);
  c.domain_radius = radius;
  const double inv2h2 = 1.0 / (2.0 * width * width);
  return LossFunction(
      n,
      [=](const Vector& x) {
        return slope * x.sum() - depth * std::exp(-(x - center).squaredNorm() * inv2h2);
      },
      [=](const Vector& x) {
        const Vector d = x - center;
        const double e = depth * std::exp(-d.squaredNorm() * inv2h2);
        return (Vector::Constant(x.size(), slope) + e * 2.0 * inv2h2 * d).eval();
      },
      c,
      [=](const Vector& x) {
        const Vector d = x - center;
        const double e = depth * std::exp(-d.squaredNorm() * inv2h2);
        const double s = 2.0 * inv2h2;
        Matrix h = e * s * Matrix::Identity(x.size(), x.size());
        h.noalias() -= e * s * s * d * d.transpose();
        return h;
      },
      label("hidden_valley_demo", p));
}

}  // namespace

const std::vector<BuiltinInfo>& builtin_catalog() {
  static const std::vector<BuiltinInfo> catalog = {
      {"quadratic", "a * ||x - c||^2", "a=1 [, c | c_1..c_n]=0"},
      {"negquadratic", "-a * ||x - c||^2", "a=1 [, c | c_1..c_n]=0"},
      {"linear", "<c, x>", "c=1 | c_1..c_n"},
      {"sine_mix", "sum_i sin(k x_i + phi) + (q/2) x_i^2", "k=1 [, q=0 [, phi=0]]"},
      {"rastrigin_smooth", "sum_i x_i^2 + A (1 - cos(w x_i))", "A=0.5 [, w=pi]"},
      {"hidden_valley_demo", "s * sum_i x_i - d * exp(-||x - c||^2 / (2 h^2))",
       "s=1 [, d=1 [, h=0.1 [, c | c_1..c_n]=0.5]]"},
  };
  return catalog;
}

LossFunction builtin_loss(std::string_view name, std::span<const double> params, int n,
                          double radius) {
  if (n < 1) throw ArgumentError("builtin dimension must be >= 1");
  if (!(radius > 0.0) || !std::isfinite(radius)) throw ArgumentError("builtin radius must be > 0");
  for (double v : params) {
    if (!std::isfinite(v)) throw ArgumentError("builtin parameters must be finite");
  }
  if (name == "quadratic") return make_quadratic(1.0, params, n, radius, name);
  if (name == "negquadratic") return make_quadratic(-1.0, params, n, radius, name);
  if (name == "linear") return make_linear(params, n, radius);
  if (name == "sine_mix") return make_sine_mix(params, n, radius);
  if (name == "rastrigin_smooth") return make_rastrigin(params, n, radius);
  if (name == "hidden_valley_demo") return make_hidden_valley(params, n, radius);
  throw ArgumentError("unknown builtin loss '" + std::string(name) + "'");
}

}  // namespace localregret
