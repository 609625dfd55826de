#include "localregret/games.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "localregret/errors.hpp"

namespace localregret {

GameSpec::GameSpec(std::string name, std::vector<GamePlayer> players)
    : name_(std::move(name)), players_(std::move(players)) {
  if (players_.empty()) throw ArgumentError("game needs at least one player");
  for (const auto& p : players_) {
    if (!p.payoff || !p.block_gradient) throw ArgumentError("game player needs payoff oracles");
  }
}

LossFunction GameSpec::induced_loss(int i, const JointPoint& joint) const {
  if (i < 0 || i >= players()) throw ArgumentError("player index out of range");
  if (static_cast<int>(joint.size()) != players()) {
    throw ArgumentError("joint point has the wrong number of blocks");
  }
  const GamePlayer& p = player(i);
  const auto slot = static_cast<std::size_t>(i);
  auto payoff = p.payoff;
  auto grad = p.block_gradient;
  auto with = [joint, slot](const Vector& x) {
    JointPoint z = joint;
    z[slot] = x;
    return z;
  };
  LossFunction::HessianFn hess;
  if (p.block_hessian) {
    hess = [with, h = p.block_hessian](const Vector& x) { return (-h(with(x))).eval(); };
  }
  std::ostringstream name;
  name << name_ << ".loss" << i;
  return LossFunction(
      p.body.dim(), [with, payoff](const Vector& x) { return -payoff(with(x)); },
      [with, grad](const Vector& x) { return (-grad(with(x))).eval(); }, p.loss_constants,
      std::move(hess), name.str());
}

double GameSpec::max_smoothness() const {
  double beta = 0.0;
  for (const auto& p : players_) beta = std::max(beta, p.loss_constants.smoothness);
  return beta;
}

GameSpec bilinear_game() {
  LossConstants k;
  k.bound = 1.0;
  k.lipschitz = 1.0;
  k.smoothness = 0.0;
  k.hessian_lipschitz = 0.0;
  k.domain_radius = 1.0;
  const auto zero1 = [](const JointPoint&) { return Matrix::Zero(1, 1).eval(); };
  GamePlayer p1{ConvexBody::cube(1, 1.0),
                [](const JointPoint& z) { return z[0][0] * z[1][0]; },
                [](const JointPoint& z) { return Vector::Constant(1, z[1][0]).eval(); }, k,
                zero1};
  GamePlayer p2{ConvexBody::cube(1, 1.0),
                [](const JointPoint& z) { return -z[0][0] * z[1][0]; },
                [](const JointPoint& z) { return Vector::Constant(1, -z[0][0]).eval(); }, k,
                zero1};
  return GameSpec("bilinear", {std::move(p1), std::move(p2)});
}

namespace {

double sigmoid(double u) {
  if (u >= 0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

// log(1 + e^u)
double softplus(double u) { return std::max(u, 0.0) + std::log1p(std::exp(-std::abs(u))); }

}  // namespace

GameSpec toy_gan_game(const ToyGanParams& params) {
  const double mu = params.target;
  const double a = params.disc_box;
  const double b = params.gen_box;
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(mu)) {
    throw ArgumentError("toy GAN: boxes must be positive and the target finite");
  }
  // L = log s(d mu) + log s(-d g) = -softplus(-d mu) - softplus(d g)
  auto objective = [mu](double d, double g) { return -softplus(-d * mu) - softplus(d * g); };
  auto d_disc = [mu](double d, double g) { return mu * sigmoid(-d * mu) - g * sigmoid(d * g); };
  auto d_gen = [](double d, double g) { return -d * sigmoid(d * g); };
  auto dd_disc = [mu](double d, double g) {
    return -mu * mu * sigmoid(d * mu) * sigmoid(-d * mu) - g * g * sigmoid(d * g) * sigmoid(-d * g);
  };
  auto dd_gen = [](double d, double g) { return -d * d * sigmoid(d * g) * sigmoid(-d * g); };

  // sup |s'(u)| = 1/4, sup |s''(u)| = 1 / (6 sqrt 3)
  const double s2 = 1.0 / (6.0 * std::sqrt(3.0));
  const double bound = softplus(a * std::abs(mu)) + softplus(a * b);
  LossConstants disc;
  disc.bound = bound;
  disc.lipschitz = std::abs(mu) + b;
  disc.smoothness = 0.25 * (mu * mu + b * b);
  disc.hessian_lipschitz = s2 * (std::abs(mu * mu * mu) + b * b * b);
  disc.domain_radius = std::max(a, b);
  LossConstants gen;
  gen.bound = bound;
  gen.lipschitz = a;
  gen.smoothness = 0.25 * a * a;
  gen.hessian_lipschitz = s2 * a * a * a;
  gen.domain_radius = std::max(a, b);

  GamePlayer discriminator{
      ConvexBody::cube(1, a),
      [objective](const JointPoint& z) { return objective(z[0][0], z[1][0]); },
      [d_disc](const JointPoint& z) { return Vector::Constant(1, d_disc(z[0][0], z[1][0])).eval(); },
      disc,
      [dd_disc](const JointPoint& z) {
        return Matrix::Constant(1, 1, dd_disc(z[0][0], z[1][0])).eval();
      }};
  GamePlayer generator{
      ConvexBody::cube(1, b),
      [objective](const JointPoint& z) { return -objective(z[0][0], z[1][0]); },
      [d_gen](const JointPoint& z) { return Vector::Constant(1, -d_gen(z[0][0], z[1][0])).eval(); },
      gen,
      [dd_gen](const JointPoint& z) {
        return Matrix::Constant(1, 1, -dd_gen(z[0][0], z[1][0])).eval();
      }};
  return GameSpec("toy_gan", {std::move(discriminator), std::move(generator)});
}

GameSpec single_player_game(LossFunction payoff, ConvexBody body) {
  if (payoff.dim() != body.dim()) throw ArgumentError("payoff and body dimensions differ");
  GamePlayer p{std::move(body),
               [payoff](const JointPoint& z) { return payoff.value(z[0]); },
               [payoff](const JointPoint& z) { return payoff.gradient(z[0]); },
               payoff.constants(), {}};
  if (payoff.has_hessian()) {
    p.block_hessian = [payoff](const JointPoint& z) { return payoff.hessian(z[0]); };
  }
  return GameSpec("single:" + payoff.name(), {std::move(p)});
}

LearnerFactory tsogd_factory(double eta) {
  return [eta](int, const GamePlayer& p, int w,
               const Point& start) -> std::unique_ptr<OnlineLearner> {
    TsogdConfig c;
    c.start = start;
    c.window = w;
    c.eta = eta;
    c.delta = p.loss_constants.lipschitz > 0.0 ? p.loss_constants.lipschitz : 1.0;
    c.body = p.body;
    return std::make_unique<TsogdLearner>(std::move(c));
  };
}

Point starting_point(const GamePlayer& player, int i, std::uint64_t seed) {
  const ConvexBody& body = player.body;
  const int n = body.dim();
  if (seed == 0) return body.project(Vector::Zero(n));
  std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(i)));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector x(n);
  switch (body.kind()) {
    case ConvexBody::Kind::kUnconstrained:
      for (int j = 0; j < n; ++j) x[j] = normal(rng);
      return x;
    case ConvexBody::Kind::kBox:
      for (int j = 0; j < n; ++j) {
        x[j] = body.lower()[j] + unit(rng) * (body.upper()[j] - body.lower()[j]);
      }
      return body.project(x);
    case ConvexBody::Kind::kBall: {
      for (int j = 0; j < n; ++j) x[j] = normal(rng);
      const double r = body.radius() * std::pow(unit(rng), 1.0 / n);
      return body.project(body.center() + r * x / x.norm());
    }
  }
  return body.project(Vector::Zero(n));
}

SimulationResult simulate(const GameSpec& game, const LearnerFactory& factory, int w, long T,
                          std::uint64_t seed, RoundHook hook, UpdateOrder order) {
  if (w < 1 || T < 1) throw ArgumentError("simulate: need w >= 1 and T >= 1");
  const int k = game.players();
  std::vector<std::unique_ptr<OnlineLearner>> learners;
  learners.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    learners.push_back(factory(i, game.player(i), w, starting_point(game.player(i), i, seed)));
    if (!learners.back()) throw ArgumentError("learner factory returned null");
  }

  auto observe = [&](int i, LossFunction loss) {
    try {
      learners[static_cast<std::size_t>(i)]->observe(std::move(loss));
    } catch (const std::exception& e) {
      throw PlayerFailure(i, e.what());
    }
  };

  SimulationResult result;
  result.history.rounds.reserve(static_cast<std::size_t>(T));
  std::vector<LossFunction> losses;
  for (long t = 1; t <= T; ++t) {
    JointPoint outputs;
    outputs.reserve(static_cast<std::size_t>(k));
    for (const auto& l : learners) outputs.push_back(l->current());
    result.history.rounds.push_back(outputs);

    if (order == UpdateOrder::kSimultaneous) {
      losses.clear();
      for (int i = 0; i < k; ++i) losses.push_back(game.induced_loss(i, outputs));
      if (hook) hook(t, outputs, losses);
      for (int i = 0; i < k; ++i) observe(i, losses[static_cast<std::size_t>(i)]);
    } else {
      if (hook) hook(t, outputs, {});
      JointPoint live = outputs;
      for (int i = 0; i < k; ++i) {
        observe(i, game.induced_loss(i, live));
        live[static_cast<std::size_t>(i)] = learners[static_cast<std::size_t>(i)]->current();
      }
    }
  }
  for (const auto& l : learners) result.ledgers.push_back(l->ledger());
  return result;
}

double replay_certificate(const GameHistory& history, const GameSpec& game, int player,
                          double eta, int w, long t) {
  if (t < 1 || t > history.horizon()) throw ArgumentError("certificate round out of range");
  const GamePlayer& p = game.player(player);
  WindowAverage avg(w, p.body.dim());
  for (long s = std::max(1L, t - w + 1); s <= t; ++s) {
    avg.push(game.induced_loss(player, history.at(s)));
  }
  const Point& x = history.at(t)[static_cast<std::size_t>(player)];
  return projected_gradient(p.body, eta, avg.gradient(x), x).norm();
}

EquilibriumReport check_equilibrium(const GameHistory& history, const GameSpec& game, double eta,
                                    int w, long t, std::span<const RegretLedger> ledgers) {
  const long T = history.horizon();
  if (w < 1 || t < w || t > T) {
    std::ostringstream os;
    os << "check_equilibrium: need w <= t <= T, got w = " << w << ", t = " << t << ", T = " << T;
    throw ArgumentError(os.str());
  }
  EquilibriumReport report;
  report.round = t;
  for (int i = 0; i < game.players(); ++i) {
    const double norm = replay_certificate(history, game, i, eta, w, t);
    report.player_norms.push_back(norm);
    report.epsilon = std::max(report.epsilon, norm);
  }
  report.bound = std::numeric_limits<double>::quiet_NaN();
  if (!ledgers.empty() && T > w) {
    std::vector<double> regrets;
    for (const auto& l : ledgers) regrets.push_back(l.cumulative());
    report.bound = bounds::equilibrium_epsilon(regrets, T, w);
  }
  return report;
}

EquilibriumReport best_equilibrium_round(const GameHistory& history, const GameSpec& game,
                                         double eta, int w,
                                         std::span<const RegretLedger> ledgers) {
  const long T = history.horizon();
  if (T <= w) throw ArgumentError("best_equilibrium_round: need T > w");
  EquilibriumReport best;
  bool first = true;
  for (long t = w; t <= T; ++t) {
    EquilibriumReport r = check_equilibrium(history, game, eta, w, t, ledgers);
    if (first || r.epsilon < best.epsilon) {
      best = std::move(r);
      first = false;
    }
  }
  return best;
}

}  // namespace localregret
