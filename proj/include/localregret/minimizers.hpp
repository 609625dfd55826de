#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "localregret/geometry.hpp"
#include "localregret/losses.hpp"

namespace localregret {

/// Per-round bookkeeping of an online run.
///
/// Round t records c_t (the stationarity cost of the played point x_t
/// against F_{t,w}) and the number of inner steps executed after f_t was
/// observed, i.e. the steps that produced x_{t+1}. In the tau convention
/// tau_1 = 0 and tau_t = steps(t - 1).
class RegretLedger {
 public:
  void record(double cost, std::size_t steps);

  std::size_t rounds() const noexcept { return costs_.size(); }
  std::span<const double> costs() const noexcept { return costs_; }
  std::span<const std::size_t> steps() const noexcept { return steps_; }
  /// Running sums in ascending round order; cumulative(T) is R_w(T).
  double cumulative() const noexcept { return cumulative_.empty() ? 0.0 : cumulative_.back(); }
  double cumulative(std::size_t t) const;

  /// 1-based; tau(1) == 0.
  std::size_t tau(std::size_t t) const;
  /// sum_{t=1}^{T} tau_t. Excludes the inner loop of the last round.
  std::size_t tau_total() const noexcept;
  /// Every inner step, including the last round's.
  std::size_t total_inner_steps() const noexcept;

  OracleCounters& counters() noexcept { return counters_; }
  const OracleCounters& counters() const noexcept { return counters_; }
  /// Snapshot of the counters taken as each round was recorded.
  std::span<const OracleCounters> counter_history() const noexcept { return counter_history_; }

 private:
  std::vector<double> costs_;
  std::vector<double> cumulative_;
  std::vector<std::size_t> steps_;
  std::vector<OracleCounters> counter_history_;
  OracleCounters counters_;
};

struct LocalRegret {
  double total = 0.0;
  /// total / T; bounds the expected cost of a uniformly drawn round.
  double mean = 0.0;
};

/// Ascending-order sum of non-negative per-round costs.
LocalRegret local_regret(std::span<const double> costs);

/// Fired once per inner-loop step when an observer is installed. Loss
/// values are computed outside the oracle counters.
struct InnerStepEvent {
  long round = 0;
  std::size_t step = 0;
  double objective_before = 0.0;
  double objective_after = 0.0;
  /// ||projected gradient|| for gradient descent, Phi for the Newton method.
  double stationarity = 0.0;
};
using InnerStepObserver = std::function<void(const InnerStepEvent&)>;

/// A learner that plays a point, then observes the round's loss.
class OnlineLearner {
 public:
  virtual ~OnlineLearner() = default;

  virtual const Point& current() const = 0;
  /// Records the cost of current() and moves to the next point.
  virtual void observe(LossFunction loss) = 0;
  virtual const RegretLedger& ledger() const = 0;
  virtual const WindowAverage& window() const = 0;
};

inline constexpr std::size_t kDefaultSafetyCap = 1'000'000;

/// 1/beta, or 1 for losses with zero curvature.
double default_learning_rate(double smoothness) noexcept;

struct TsogdConfig {
  int window = 1;
  double eta = 1.0;
  double delta = 1.0;
  ConvexBody body = ConvexBody::unconstrained(1);
  /// Projection of the origin when empty.
  std::optional<Point> start;
  std::size_t safety_cap = kDefaultSafetyCap;
};

/// Time-smoothed online gradient descent. After observing f_t it runs
/// projected gradient descent on F_{t,w} from x_t until
/// ||grad_{K,eta} F_{t,w}|| <= delta / w.
class TsogdLearner final : public OnlineLearner {
 public:
  explicit TsogdLearner(TsogdConfig config);

  const Point& current() const override { return x_; }
  void observe(LossFunction loss) override;
  const RegretLedger& ledger() const override { return ledger_; }
  const WindowAverage& window() const override { return window_; }
  const TsogdConfig& config() const noexcept { return config_; }

  void set_observer(InnerStepObserver observer) { observer_ = std::move(observer); }

 private:
  TsogdConfig config_;
  WindowAverage window_;
  RegretLedger ledger_;
  Point x_;
  InnerStepObserver observer_;
};

struct OnlineRun {
  /// Played points x_1..x_T.
  std::vector<Point> iterates;
  /// x_{T+1}, produced by the last round's inner loop.
  Point final_point;
  RegretLedger ledger;
};

OnlineRun tsogd_run(std::span<const LossFunction> losses, const TsogdConfig& config,
                    InnerStepObserver observer = {});

struct StochasticTsogdConfig {
  int window = 1;
  double eta = 1.0;
  /// Must be unconstrained.
  ConvexBody body = ConvexBody::unconstrained(1);
  std::optional<Point> start;
};

/// Single noisy step per round:
///   x_{t+1} = x_t - (eta / w) sum_{i<w} sample(f_{t-i}, x_t)
/// with one sample per present loss. Ledger costs are exact
/// ||grad F_{t,w}(x_t)||^2 for verification and are not charged to the
/// counters; the stochastic counter holds the samples drawn.
OnlineRun stochastic_tsogd_run(std::span<StochasticGradientOracle> oracles,
                               const StochasticTsogdConfig& config);

struct EigenPair {
  double value = 0.0;
  Vector vector;
};

/// Smallest eigenvalue and a unit eigenvector of (h + h^T) / 2.
EigenPair min_eig(const Matrix& h);

/// Full symmetric eigendecomposition, eigenvalues ascending, eigenvectors in
/// the columns. Householder tridiagonalisation followed by implicit QL.
void symmetric_eigen(const Matrix& h, Vector& values, Matrix& vectors);

struct PhiPotential {
  double grad_term = 0.0;
  /// -(4 beta / (3 L2^2)) * lambda_min^3
  double eig_term = 0.0;
  double value = 0.0;
};

PhiPotential phi_potential(const Vector& gradient, double lambda_min, double smoothness,
                           double hessian_lipschitz);

struct NewtonConfig {
  int window = 1;
  /// Defaults to beta.
  std::optional<double> delta;
  double smoothness = 1.0;
  double hessian_lipschitz = 1.0;
  int dim = 1;
  std::optional<Point> start;
  std::size_t safety_cap = kDefaultSafetyCap;
};

/// Time-smoothed online Newton method (unconstrained). Each inner step
/// compares a gradient step z - grad/beta against a negative-curvature
/// step z + (2|lambda|/L2) v, v oriented against the gradient, and keeps
/// whichever lowers F_{t,w} more. The loop runs while Phi > delta^3 / w^3.
class NewtonLearner final : public OnlineLearner {
 public:
  explicit NewtonLearner(NewtonConfig config);

  const Point& current() const override { return x_; }
  void observe(LossFunction loss) override;
  const RegretLedger& ledger() const override { return ledger_; }
  const WindowAverage& window() const override { return window_; }
  /// Phi_t(x_t) split into its two terms, one entry per round.
  std::span<const PhiPotential> phi() const noexcept { return phi_; }
  double delta() const noexcept { return delta_; }
  /// Number of accepted negative-curvature steps.
  std::size_t curvature_steps() const noexcept { return curvature_steps_; }

  void set_observer(InnerStepObserver observer) { observer_ = std::move(observer); }

 private:
  PhiPotential potential_at(const Vector& x, Vector* gradient, EigenPair* eig);

  NewtonConfig config_;
  double delta_;
  WindowAverage window_;
  RegretLedger ledger_;
  std::vector<PhiPotential> phi_;
  std::size_t curvature_steps_ = 0;
  Point x_;
  InnerStepObserver observer_;
};

struct NewtonRun {
  OnlineRun run;
  std::vector<PhiPotential> phi;
  std::size_t curvature_steps = 0;
};

NewtonRun newton_run(std::span<const LossFunction> losses, const NewtonConfig& config,
                     InnerStepObserver observer = {});

/// Closed-form guarantees the runs are checked against.
namespace bounds {

/// (delta + 2L)^2 / w^2, the cap on every tsogd cost.
double tsogd_round_cost(double delta, double lipschitz, int w);
/// (delta + 2L)^2 T / w^2
double tsogd_regret(double delta, double lipschitz, long T, int w);
/// M / (delta^2 (eta - beta eta^2 / 2)) * (2 T w + w^2)
double tsogd_inner_steps(double bound, double delta, double eta, double smoothness, long T,
                         int w);
/// (delta + 2L) sqrt(2 / eps), rounded up.
int offline_window(double delta, double lipschitz, double epsilon);

/// (8 beta M + sigma^2) T / w
double stochastic_regret(double smoothness, double bound, double sigma, long T, int w);
/// T w - w (w - 1) / 2 for T >= w: one sample per present loss per round.
std::uint64_t stochastic_samples(long T, int w);
/// (12 M beta + 2 sigma^2) / eps, rounded up.
int stochastic_window(double bound, double smoothness, double sigma, double epsilon);

/// max{(delta^{3/2} + 2L)^2, (4 beta / (3 L2^2)) (delta + 2 beta)^3}
double newton_phi_constant(double delta, double lipschitz, double smoothness,
                           double hessian_lipschitz);
/// C1 T / w^2
double newton_phi_sum(double delta, double lipschitz, double smoothness,
                      double hessian_lipschitz, long T, int w);
/// (2 beta M / delta^3) (2 T w^2 + w^3)
double newton_inner_steps(double bound, double smoothness, double delta, long T, int w);
/// (6 M / beta^2) T w^2, the delta = beta specialisation.
double newton_inner_steps_simplified(double bound, double smoothness, long T, int w);

/// sqrt(sum_i R_i / (T - w))
double equilibrium_epsilon(std::span<const double> regrets, long T, int w);

}  // namespace bounds

}  // namespace localregret
