#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "localregret/geometry.hpp"

namespace localregret {

/// Regularity constants of a loss: |f| <= bound, L-Lipschitz, beta-smooth
/// and (optionally) an L2-Lipschitz Hessian. They hold on the cube
/// [-domain_radius, domain_radius]^n; an infinite radius means globally.
struct LossConstants {
  double bound = 0.0;
  double lipschitz = 0.0;
  double smoothness = 0.0;
  std::optional<double> hessian_lipschitz;
  double domain_radius = std::numeric_limits<double>::infinity();

  bool global() const noexcept { return domain_radius == std::numeric_limits<double>::infinity(); }

  /// Coordinatewise max; the result is valid on the smaller of the two domains.
  static LossConstants envelope(const LossConstants& a, const LossConstants& b);
};

/// Number of oracle evaluations, one per (loss, point) pair.
struct OracleCounters {
  std::uint64_t value = 0;
  std::uint64_t gradient = 0;
  std::uint64_t hessian = 0;
  std::uint64_t stochastic = 0;

  OracleCounters& operator+=(const OracleCounters& other) noexcept;
};

/// First/second-order oracle for a single loss f_t. Cheap to copy: the
/// oracles are shared and immutable.
class LossFunction {
 public:
  using ValueFn = std::function<double(const Vector&)>;
  using GradientFn = std::function<Vector(const Vector&)>;
  using HessianFn = std::function<Matrix(const Vector&)>;

  LossFunction(int dim, ValueFn value, GradientFn gradient, LossConstants constants,
               HessianFn hessian = {}, std::string name = {});

  /// The identically-zero loss on R^dim.
  static LossFunction zero(int dim);

  int dim() const noexcept { return impl_->dim; }
  const LossConstants& constants() const noexcept { return impl_->constants; }
  const std::string& name() const noexcept { return impl_->name; }
  bool has_hessian() const noexcept { return static_cast<bool>(impl_->hessian); }
  bool is_zero() const noexcept { return impl_->is_zero; }

  double value(const Vector& x) const;
  Vector gradient(const Vector& x) const;
  Matrix hessian(const Vector& x) const;

  /// -f with the same constants.
  LossFunction negated() const;

 private:
  struct Impl {
    int dim;
    ValueFn value;
    GradientFn gradient;
    HessianFn hessian;
    LossConstants constants;
    std::string name;
    bool is_zero = false;
  };
  explicit LossFunction(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  void check_dim(const Vector& x) const;

  std::shared_ptr<const Impl> impl_;
};

/// Sliding-window average F_{t,w}(x) = (1/w) sum_{i<w} f_{t-i}(x) where
/// losses with t - i <= 0 are identically zero.
///
/// Holds loss handles (not samples) so earlier losses can be re-evaluated
/// at fresh points. Every evaluation accepts an optional counter that is
/// charged one call per buffered loss.
class WindowAverage {
 public:
  WindowAverage(int window, int dim);

  int window() const noexcept { return window_; }
  int dim() const noexcept { return dim_; }
  /// Current round index t (number of pushes so far).
  long round() const noexcept { return round_; }
  /// Buffered losses, at most `window`, most recent last.
  std::size_t buffered() const noexcept { return buffer_.size(); }
  const LossFunction& latest() const;
  /// f_{t-lag}, lag < buffered().
  const LossFunction& member(std::size_t lag) const;

  /// Advances t by one; evicts the oldest loss once w are held.
  void push(LossFunction f);

  double value(const Vector& x, OracleCounters* counters = nullptr) const;
  Vector gradient(const Vector& x, OracleCounters* counters = nullptr) const;
  /// Empty unless every buffered loss carries a Hessian oracle.
  std::optional<Matrix> hessian(const Vector& x, OracleCounters* counters = nullptr) const;
  bool has_hessian() const noexcept;

  struct Evaluation {
    double value = 0.0;
    Vector gradient;
    std::optional<Matrix> hessian;
  };
  Evaluation evaluate(const Vector& x, OracleCounters* counters = nullptr) const;

  /// Envelope of the buffered losses' constants (zeros when empty).
  LossConstants constants() const;

 private:
  void check_dim(const Vector& x) const;

  int window_;
  int dim_;
  long round_ = 0;
  std::deque<LossFunction> buffer_;
};

/// Value-semantics form of WindowAverage::push.
[[nodiscard]] WindowAverage window_push(WindowAverage wa, LossFunction f);

/// Unbiased gradient oracle: exact gradient plus isotropic Gaussian noise
/// with per-coordinate variance sigma^2 / n, so E||noise||^2 = sigma^2.
/// Owns its random stream; not safe for concurrent use.
class StochasticGradientOracle {
 public:
  StochasticGradientOracle(LossFunction base, double sigma, std::uint64_t seed);

  const LossFunction& base() const noexcept { return base_; }
  double sigma() const noexcept { return sigma_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t samples() const noexcept { return samples_; }

  Vector sample(const Vector& x);

  /// Independent oracle for the same loss with a seed derived from this
  /// one's seed and `stream`.
  StochasticGradientOracle fork(std::uint64_t stream) const;

 private:
  LossFunction base_;
  double sigma_;
  std::uint64_t seed_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uint64_t samples_ = 0;
};

/// splitmix64 finaliser, used to derive child seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

struct BuiltinInfo {
  std::string name;
  std::string formula;
  std::string params;
};

const std::vector<BuiltinInfo>& builtin_catalog();

/// Built-in loss by name. The returned constants hold on the cube
/// [-radius, radius]^n (globally where the function allows it).
///
///   quadratic          a * ||x - c||^2              params: a [, c_1..c_n]
///   negquadratic       -a * ||x - c||^2             params: a [, c_1..c_n]
///   linear             <c, x>                       params: c | c_1..c_n
///   sine_mix           sum sin(k x_i + phi) + q/2 x_i^2   params: k [, q [, phi]]
///   rastrigin_smooth   sum x_i^2 + A (1 - cos(w x_i))     params: A [, w]
///   hidden_valley_demo s * sum x_i - d exp(-||x - c||^2 / (2 h^2))
///                                                  params: s [, d [, h [, c]]]
LossFunction builtin_loss(std::string_view name, std::span<const double> params, int n,
                          double radius = 1.0);

}  // namespace localregret
