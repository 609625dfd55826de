#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "localregret/geometry.hpp"
#include "localregret/losses.hpp"
#include "localregret/minimizers.hpp"

namespace localregret {

/// One strategy block per player.
using JointPoint = std::vector<Point>;

/// A player who maximises `payoff`. `block_gradient` is the gradient of
/// the payoff with respect to the player's own block; `loss_constants`
/// describe the induced loss x -> -payoff(..., x, ...) on `body`.
struct GamePlayer {
  ConvexBody body;
  std::function<double(const JointPoint&)> payoff;
  std::function<Vector(const JointPoint&)> block_gradient;
  LossConstants loss_constants;
  std::function<Matrix(const JointPoint&)> block_hessian = {};
};

class GameSpec {
 public:
  GameSpec(std::string name, std::vector<GamePlayer> players);

  const std::string& name() const noexcept { return name_; }
  int players() const noexcept { return static_cast<int>(players_.size()); }
  const GamePlayer& player(int i) const { return players_.at(static_cast<std::size_t>(i)); }

  /// x -> -f_i(joint with block i replaced by x). Captures a copy of
  /// `joint`, so later changes to the caller's point are not visible.
  LossFunction induced_loss(int i, const JointPoint& joint) const;

  /// Largest smoothness over players' induced losses.
  double max_smoothness() const;

 private:
  std::string name_;
  std::vector<GamePlayer> players_;
};

/// f_1(x, y) = x y = -f_2(x, y) on [-1, 1]^2.
GameSpec bilinear_game();

struct ToyGanParams {
  /// Location of the real data point.
  double target = 1.0;
  /// Discriminator weight lives in [-disc_box, disc_box].
  double disc_box = 2.0;
  /// Generator output lives in [-gen_box, gen_box].
  double gen_box = 2.0;
};

/// Scalar GAN with a Dirac data distribution at `target`, a Dirac
/// generator at theta_G and a logistic discriminator D(x) = s(theta_D x):
///   L = log s(theta_D target) + log(1 - s(theta_D theta_G)).
/// Player 0 (discriminator) has payoff L, player 1 (generator) -L.
GameSpec toy_gan_game(const ToyGanParams& params = {});

/// Single player maximising f(x) on `body`; useful to check degenerate
/// behaviour against a plain tsogd run.
GameSpec single_player_game(LossFunction payoff, ConvexBody body);

struct GameHistory {
  /// rounds[t - 1] is the joint point played at round t.
  std::vector<JointPoint> rounds;

  long horizon() const noexcept { return static_cast<long>(rounds.size()); }
  const JointPoint& at(long t) const { return rounds.at(static_cast<std::size_t>(t - 1)); }
};

enum class UpdateOrder {
  kSimultaneous,
  /// Demo only: player i sees blocks j < i already updated. Not covered by
  /// the equilibrium guarantee.
  kAlternating,
};

using LearnerFactory = std::function<std::unique_ptr<OnlineLearner>(
    int player, const GamePlayer&, int window, const Point& start)>;

/// Factory producing tsogd learners with the shared learning rate `eta`
/// and delta = L_i for each player.
LearnerFactory tsogd_factory(double eta);

/// Called once per round after every player has committed x_t and before
/// any loss is shown. `losses[i]` is the loss about to be shown to player i.
using RoundHook = std::function<void(long t, const JointPoint& outputs,
                                     std::span<const LossFunction> losses)>;

struct SimulationResult {
  GameHistory history;
  std::vector<RegretLedger> ledgers;
};

/// Start point for player i: seed 0 gives the projection of the origin,
/// other seeds a uniform draw from the body (box/ball) or a standard
/// normal (unconstrained).
Point starting_point(const GamePlayer& player, int i, std::uint64_t seed);

/// k learners play T rounds; each observes f_{i,t}(x) = -f_i(x_t with block i free).
/// Learner failures are rethrown as PlayerFailure.
SimulationResult simulate(const GameSpec& game, const LearnerFactory& factory, int w, long T,
                          std::uint64_t seed = 0, RoundHook hook = {},
                          UpdateOrder order = UpdateOrder::kSimultaneous);

struct EquilibriumReport {
  long round = 0;
  /// ||grad_{K_i,eta} [(1/w) sum_{j<w} l_{i,t-j}](x_t^i)|| per player, where
  /// l_{i,s}(x) = -f_i(x_s with block i replaced by x).
  std::vector<double> player_norms;
  double epsilon = 0.0;
  /// sqrt(sum_i R_i(T) / (T - w)); NaN when no ledgers were supplied.
  double bound = 0.0;
};

/// Replays player i's window-averaged deviation loss at round t from raw
/// history, zero-padding rounds before the first. Valid for 1 <= t <= T.
double replay_certificate(const GameHistory& history, const GameSpec& game, int player,
                          double eta, int w, long t);

/// Requires w <= t <= T.
EquilibriumReport check_equilibrium(const GameHistory& history, const GameSpec& game, double eta,
                                    int w, long t,
                                    std::span<const RegretLedger> ledgers = {});

/// Report with the smallest epsilon over t in [w, T]. Requires T > w.
EquilibriumReport best_equilibrium_round(const GameHistory& history, const GameSpec& game,
                                         double eta, int w,
                                         std::span<const RegretLedger> ledgers = {});

}  // namespace localregret
