#include "localregret/minimizers.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "localregret/errors.hpp"

namespace localregret {

// ---------------------------------------------------------------------------
// Ledger

void RegretLedger::record(double cost, std::size_t steps) {
  if (!(cost >= 0.0)) throw ArgumentError("per-round cost must be >= 0");
  costs_.push_back(cost);
  cumulative_.push_back(cumulative() + cost);
  steps_.push_back(steps);
  counter_history_.push_back(counters_);
}

double RegretLedger::cumulative(std::size_t t) const {
  if (t == 0) return 0.0;
  if (t > cumulative_.size()) throw ArgumentError("ledger round out of range");
  return cumulative_[t - 1];
}

std::size_t RegretLedger::tau(std::size_t t) const {
  if (t == 0 || t > steps_.size()) throw ArgumentError("ledger round out of range");
  return t == 1 ? 0 : steps_[t - 2];
}

std::size_t RegretLedger::tau_total() const noexcept {
  if (steps_.empty()) return 0;
  return std::accumulate(steps_.begin(), steps_.end() - 1, std::size_t{0});
}

std::size_t RegretLedger::total_inner_steps() const noexcept {
  return std::accumulate(steps_.begin(), steps_.end(), std::size_t{0});
}

LocalRegret local_regret(std::span<const double> costs) {
  LocalRegret out;
  for (double c : costs) {
    if (!(c >= 0.0)) throw ArgumentError("local_regret: costs must be >= 0");
    out.total += c;
  }
  out.mean = costs.empty() ? 0.0 : out.total / static_cast<double>(costs.size());
  return out;
}

double default_learning_rate(double smoothness) noexcept {
  return smoothness > 0.0 ? 1.0 / smoothness : 1.0;
}

// ---------------------------------------------------------------------------
// Time-smoothed online gradient descent

namespace {

Point initial_point(const ConvexBody& body, const std::optional<Point>& start) {
  if (!start) return body.project(Vector::Zero(body.dim()));
  require_finite(*start, "start point");
  if (start->size() != body.dim()) throw ArgumentError("start point dimension mismatch");
  if (!body.contains(*start)) throw PreconditionError("start point lies outside the body");
  return body.project(*start);
}

[[noreturn]] void cap_exceeded(const char* algorithm, long round, std::size_t steps,
                               double measure, double threshold) {
  std::ostringstream os;
  os << algorithm << ": inner loop exceeded safety cap of " << steps << " steps in round "
     << round << " (stationarity " << measure << " > threshold " << threshold
     << "); the declared loss constants are probably violated";
  throw SafetyCapExceeded(os.str(), round, static_cast<long>(steps));
}

}  // namespace

TsogdLearner::TsogdLearner(TsogdConfig config)
    : config_(std::move(config)), window_(config_.window, config_.body.dim()) {
  if (!(config_.eta > 0.0) || !std::isfinite(config_.eta)) {
    throw ArgumentError("tsogd: eta must be positive and finite");
  }
  if (!(config_.delta > 0.0)) throw ArgumentError("tsogd: delta must be positive");
  x_ = initial_point(config_.body, config_.start);
}

void TsogdLearner::observe(LossFunction loss) {
  const long t = window_.round() + 1;
  const double beta = loss.constants().smoothness;
  const double eta = config_.eta;
  if (!(eta * (1.0 - 0.5 * beta * eta) > 0.0)) {
    std::ostringstream os;
    os << "tsogd: learning rate eta = " << eta << " violates eta < 2 / beta with beta = " << beta
       << " in round " << t;
    throw PreconditionError(os.str());
  }
  window_.push(std::move(loss));

  const ConvexBody& body = config_.body;
  const double threshold = config_.delta / config_.window;
  OracleCounters& counters = ledger_.counters();

  Point x = x_;
  ProjectedGradient pg = projected_gradient(body, eta, window_.gradient(x, &counters), x);
  const double cost = pg.squared_norm();
  std::size_t steps = 0;
  double norm = pg.norm();
  while (norm > threshold) {
    if (steps >= config_.safety_cap) cap_exceeded("tsogd", t, steps, norm, threshold);
    const double before = observer_ ? window_.value(x) : 0.0;
    x = body.project(x - eta * pg.value);
    ++steps;
    if (observer_) observer_({t, steps, before, window_.value(x), norm});
    pg = projected_gradient(body, eta, window_.gradient(x, &counters), x);
    norm = pg.norm();
  }
  ledger_.record(cost, steps);
  x_ = std::move(x);
}

OnlineRun tsogd_run(std::span<const LossFunction> losses, const TsogdConfig& config,
                    InnerStepObserver observer) {
  TsogdLearner learner(config);
  learner.set_observer(std::move(observer));
  OnlineRun run;
  run.iterates.reserve(losses.size());
  for (const auto& f : losses) {
    run.iterates.push_back(learner.current());
    learner.observe(f);
  }
  run.final_point = learner.current();
  run.ledger = learner.ledger();
  return run;
}

// ---------------------------------------------------------------------------
// Stochastic variant

OnlineRun stochastic_tsogd_run(std::span<StochasticGradientOracle> oracles,
                               const StochasticTsogdConfig& config) {
  if (!config.body.is_unconstrained()) {
    throw PreconditionError(
        "stochastic tsogd is defined only for unconstrained bodies; got a constrained body");
  }
  if (config.window < 1) throw ArgumentError("stochastic tsogd: window must be >= 1");
  if (!(config.eta > 0.0) || !std::isfinite(config.eta)) {
    throw ArgumentError("stochastic tsogd: eta must be positive and finite");
  }
  const int n = config.body.dim();
  for (const auto& o : oracles) {
    if (o.base().dim() != n) throw ArgumentError("stochastic tsogd: oracle dimension mismatch");
  }

  OnlineRun run;
  Point x = initial_point(config.body, config.start);
  WindowAverage exact(config.window, n);
  const long T = static_cast<long>(oracles.size());
  const double scale = config.eta / config.window;
  run.iterates.reserve(oracles.size());
  for (long t = 1; t <= T; ++t) {
    exact.push(oracles[static_cast<std::size_t>(t - 1)].base());
    run.iterates.push_back(x);
    const double cost = exact.gradient(x).squaredNorm();

    Vector sum = Vector::Zero(n);
    for (long i = 0; i < config.window && t - i >= 1; ++i) {
      sum += oracles[static_cast<std::size_t>(t - 1 - i)].sample(x);
      ++run.ledger.counters().stochastic;
    }
    x = x - scale * sum;
    require_finite(x, "stochastic tsogd iterate");
    run.ledger.record(cost, 1);
  }
  run.final_point = x;
  return run;
}

// ---------------------------------------------------------------------------
// Time-smoothed online Newton method

PhiPotential phi_potential(const Vector& gradient, double lambda_min, double smoothness,
                           double hessian_lipschitz) {
  PhiPotential phi;
  phi.grad_term = gradient.squaredNorm();
  phi.eig_term = -(4.0 * smoothness / (3.0 * hessian_lipschitz * hessian_lipschitz)) *
                 lambda_min * lambda_min * lambda_min;
  phi.value = std::max(phi.grad_term, phi.eig_term);
  return phi;
}

NewtonLearner::NewtonLearner(NewtonConfig config)
    : config_(std::move(config)),
      delta_(config_.delta.value_or(config_.smoothness)),
      window_(config_.window, config_.dim) {
  if (!(config_.smoothness > 0.0) || !std::isfinite(config_.smoothness)) {
    throw ArgumentError("newton: smoothness beta must be positive");
  }
  if (!(config_.hessian_lipschitz > 0.0) || !std::isfinite(config_.hessian_lipschitz)) {
    throw ArgumentError("newton: Hessian Lipschitz constant L2 must be positive");
  }
  if (!(delta_ > 0.0)) throw ArgumentError("newton: delta must be positive");
  x_ = initial_point(ConvexBody::unconstrained(config_.dim), config_.start);
}

PhiPotential NewtonLearner::potential_at(const Vector& x, Vector* gradient, EigenPair* eig) {
  OracleCounters& counters = ledger_.counters();
  *gradient = window_.gradient(x, &counters);
  const std::optional<Matrix> h = window_.hessian(x, &counters);
  *eig = min_eig(*h);
  return phi_potential(*gradient, eig->value, config_.smoothness, config_.hessian_lipschitz);
}

void NewtonLearner::observe(LossFunction loss) {
  const long t = window_.round() + 1;
  if (!loss.has_hessian()) throw PreconditionError("newton: loss has no Hessian oracle");
  const LossConstants& k = loss.constants();
  const double slack = 1.0 + 1e-12;
  if (k.smoothness > config_.smoothness * slack) {
    std::ostringstream os;
    os << "newton: loss smoothness " << k.smoothness << " exceeds configured beta "
       << config_.smoothness;
    throw PreconditionError(os.str());
  }
  if (!k.hessian_lipschitz || *k.hessian_lipschitz > config_.hessian_lipschitz * slack) {
    throw PreconditionError("newton: loss Hessian Lipschitz constant exceeds configured L2");
  }
  window_.push(std::move(loss));

  const double beta = config_.smoothness;
  const double l2 = config_.hessian_lipschitz;
  const double w = config_.window;
  const double threshold = delta_ * delta_ * delta_ / (w * w * w);
  OracleCounters& counters = ledger_.counters();

  Point x = x_;
  Vector g;
  EigenPair eig;
  PhiPotential phi = potential_at(x, &g, &eig);
  phi_.push_back(phi);
  const double cost = phi.value;

  std::size_t steps = 0;
  while (phi.value > threshold) {
    if (steps >= config_.safety_cap) cap_exceeded("newton", t, steps, phi.value, threshold);
    const double before = observer_ ? window_.value(x) : 0.0;

    Point next = x - g / beta;
    double next_value = window_.value(next, &counters);
    if (eig.value < 0.0) {
      Vector v = eig.vector;
      if (v.dot(g) > 0.0) v = -v;
      Point y = x + (2.0 * -eig.value / l2) * v;
      const double y_value = window_.value(y, &counters);
      if (y_value < next_value) {
        next = std::move(y);
        next_value = y_value;
        ++curvature_steps_;
      }
    }
    x = std::move(next);
    require_finite(x, "newton iterate");
    ++steps;
    if (observer_) observer_({t, steps, before, next_value, phi.value});
    phi = potential_at(x, &g, &eig);
  }
  ledger_.record(cost, steps);
  x_ = std::move(x);
}

NewtonRun newton_run(std::span<const LossFunction> losses, const NewtonConfig& config,
                     InnerStepObserver observer) {
  NewtonLearner learner(config);
  learner.set_observer(std::move(observer));
  NewtonRun out;
  out.run.iterates.reserve(losses.size());
  for (const auto& f : losses) {
    out.run.iterates.push_back(learner.current());
    learner.observe(f);
  }
  out.run.final_point = learner.current();
  out.run.ledger = learner.ledger();
  out.phi.assign(learner.phi().begin(), learner.phi().end());
  out.curvature_steps = learner.curvature_steps();
  return out;
}

// ---------------------------------------------------------------------------
// Bounds

namespace bounds {

double tsogd_round_cost(double delta, double lipschitz, int w) {
  const double r = (delta + 2.0 * lipschitz) / w;
  return r * r;
}

double tsogd_regret(double delta, double lipschitz, long T, int w) {
  return (delta + 2.0 * lipschitz) * (delta + 2.0 * lipschitz) * static_cast<double>(T) /
         (static_cast<double>(w) * w);
}

double tsogd_inner_steps(double bound, double delta, double eta, double smoothness, long T,
                         int w) {
  const double progress = eta - 0.5 * smoothness * eta * eta;
  const double dw = w;
  return bound / (delta * delta * progress) * (2.0 * static_cast<double>(T) * dw + dw * dw);
}

int offline_window(double delta, double lipschitz, double epsilon) {
  return static_cast<int>(std::ceil((delta + 2.0 * lipschitz) * std::sqrt(2.0 / epsilon)));
}

double stochastic_regret(double smoothness, double bound, double sigma, long T, int w) {
  return (8.0 * smoothness * bound + sigma * sigma) * static_cast<double>(T) / w;
}

std::uint64_t stochastic_samples(long T, int w) {
  const auto t = static_cast<std::uint64_t>(T);
  const auto ww = static_cast<std::uint64_t>(w);
  if (t >= ww) return t * ww - ww * (ww - 1) / 2;
  return t * (t + 1) / 2;
}

int stochastic_window(double bound, double smoothness, double sigma, double epsilon) {
  return static_cast<int>(std::ceil((12.0 * bound * smoothness + 2.0 * sigma * sigma) / epsilon));
}

double newton_phi_constant(double delta, double lipschitz, double smoothness,
                           double hessian_lipschitz) {
  const double first = std::pow(std::pow(delta, 1.5) + 2.0 * lipschitz, 2.0);
  const double second = 4.0 * smoothness / (3.0 * hessian_lipschitz * hessian_lipschitz) *
                        std::pow(delta + 2.0 * smoothness, 3.0);
  return std::max(first, second);
}

double newton_phi_sum(double delta, double lipschitz, double smoothness,
                      double hessian_lipschitz, long T, int w) {
  return newton_phi_constant(delta, lipschitz, smoothness, hessian_lipschitz) *
         static_cast<double>(T) / (static_cast<double>(w) * w);
}

double newton_inner_steps(double bound, double smoothness, double delta, long T, int w) {
  const double dw = w;
  return 2.0 * smoothness * bound / (delta * delta * delta) *
         (2.0 * static_cast<double>(T) * dw * dw + dw * dw * dw);
}

double newton_inner_steps_simplified(double bound, double smoothness, long T, int w) {
  return 6.0 * bound / (smoothness * smoothness) * static_cast<double>(T) *
         static_cast<double>(w) * w;
}

double equilibrium_epsilon(std::span<const double> regrets, long T, int w) {
  if (T <= w) throw ArgumentError("equilibrium bound needs T > w");
  double sum = 0.0;
  for (double r : regrets) sum += r;
  return std::sqrt(sum / static_cast<double>(T - w));
}

}  // namespace bounds

}  // namespace localregret
