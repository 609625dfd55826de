#include <gtest/gtest.h>

#include "localregret/errors.hpp"
#include "localregret/games.hpp"
#include "localregret/minimizers.hpp"
#include "test_support.hpp"

using namespace localregret;

namespace {

Vector v1(double a) { return Vector{{a}}; }

double fd_block(const GameSpec& g, int i, const JointPoint& joint) {
  const double h = 1e-6;
  JointPoint a = joint, b = joint;
  a[i][0] += h;
  b[i][0] -= h;
  return (g.player(i).payoff(a) - g.player(i).payoff(b)) / (2 * h);
}

}  // namespace

TEST(Games, BilinearSmoke) {
  const GameSpec g = bilinear_game();
  ASSERT_EQ(g.players(), 2);
  const SimulationResult r = simulate(g, tsogd_factory(1.0), 3, 30, 5);
  EXPECT_EQ(r.history.horizon(), 30);
  for (const auto& l : r.ledgers) EXPECT_TRUE(std::isfinite(l.cumulative()));
}

TEST(Games, SinglePlayerMatchesTsogd) {
  const LossFunction payoff = builtin_loss("sine_mix", std::vector<double>{2.0, 0.5}, 2, 1.0);
  const ConvexBody body = ConvexBody::cube(2, 1.0);
  const GameSpec g = single_player_game(payoff, body);
  const double eta = 1.0 / payoff.constants().smoothness;
  const int w = 4;
  const SimulationResult sim = simulate(g, tsogd_factory(eta), w, 25, 3);

  TsogdConfig c{w, eta, payoff.constants().lipschitz, body, starting_point(g.player(0), 0, 3)};
  const OnlineRun run = tsogd_run(std::vector<LossFunction>(25, payoff.negated()), c);
  for (long t = 1; t <= 25; ++t) {
    EXPECT_EQ(sim.history.at(t)[0], run.iterates[static_cast<std::size_t>(t - 1)]);
    EXPECT_EQ(sim.ledgers[0].costs()[t - 1], run.ledger.costs()[t - 1]);
  }
  // single-player best round is the round with the smallest cost
  const EquilibriumReport best = best_equilibrium_round(sim.history, g, eta, w, sim.ledgers);
  long argmin = w;
  for (long t = w; t <= 25; ++t) {
    if (sim.ledgers[0].costs()[t - 1] < sim.ledgers[0].costs()[argmin - 1]) argmin = t;
  }
  EXPECT_NEAR(best.epsilon * best.epsilon, sim.ledgers[0].costs()[argmin - 1], 1e-12);
}

TEST(Games, ReplayMatchesLedger) {
  for (const GameSpec& g : {bilinear_game(), toy_gan_game()}) {
    for (int w : {1, 3, 7}) {
      const double eta = default_learning_rate(g.max_smoothness());
      const SimulationResult sim = simulate(g, tsogd_factory(eta), w, 30, 11);
      for (int i = 0; i < g.players(); ++i) {
        for (long t = 1; t <= 30; ++t) {
          const double c = replay_certificate(sim.history, g, i, eta, w, t);
          EXPECT_NEAR(c * c, sim.ledgers[i].costs()[t - 1], 1e-10);
        }
      }
    }
  }
}

TEST(Games, SaddleHeldGivesZeroEpsilon) {
  const GameSpec g = bilinear_game();
  GameHistory h;
  for (int t = 0; t < 5; ++t) h.rounds.push_back({v1(0.0), v1(0.0)});
  const EquilibriumReport r = check_equilibrium(h, g, 1.0, 3, 4);
  EXPECT_EQ(r.epsilon, 0.0);
  EXPECT_TRUE(std::isnan(r.bound));
  EXPECT_THROW(check_equilibrium(h, g, 1.0, 3, 2), ArgumentError);
  EXPECT_THROW(check_equilibrium(h, g, 1.0, 3, 6), ArgumentError);
}

TEST(Games, EpsilonIsMaxOfPlayerNorms) {
  const GameSpec g = toy_gan_game();
  const SimulationResult sim = simulate(g, tsogd_factory(1.0), 2, 12, 4);
  for (long t = 2; t <= 12; ++t) {
    const EquilibriumReport r = check_equilibrium(sim.history, g, 1.0, 2, t, sim.ledgers);
    EXPECT_EQ(r.epsilon, std::max(r.player_norms[0], r.player_norms[1]));
  }
}

TEST(Games, ToyGanGradients) {
  const GameSpec g = toy_gan_game({1.0, 2.0, 2.0});
  // theta_D = 0, theta_G = target: the generator's block gradient vanishes.
  const JointPoint sym{v1(0.0), v1(1.0)};
  EXPECT_NEAR(g.player(1).block_gradient(sym)[0], 0.0, 1e-15);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int k = 0; k < 200; ++k) {
    const JointPoint p{v1(u(rng)), v1(u(rng))};
    for (int i = 0; i < 2; ++i) {
      EXPECT_NEAR(g.player(i).block_gradient(p)[0], fd_block(g, i, p), 1e-6);
      const LossFunction f = g.induced_loss(i, p);
      const auto& k2 = f.constants();
      EXPECT_LE(std::abs(f.value(p[i])), k2.bound);
      EXPECT_LE(f.gradient(p[i]).norm(), k2.lipschitz + 1e-12);
      EXPECT_LE(std::abs(lrtest::fd_hessian(f, p[i])(0, 0)), k2.smoothness + 1e-6);
    }
  }
}

// Losses shown at round t are built from round-t outputs only.
TEST(Games, Simultaneity) {
  const GameSpec g = toy_gan_game();
  long rounds = 0;
  simulate(g, tsogd_factory(1.0), 3, 15, 2,
           [&](long t, const JointPoint& out, std::span<const LossFunction> losses) {
             ++rounds;
             EXPECT_EQ(t, rounds);
             for (int i = 0; i < 2; ++i) {
               EXPECT_EQ(losses[i].gradient(out[i])[0], -g.player(i).block_gradient(out)[0]);
               JointPoint moved = out;
               moved[i][0] = 0.37;
               EXPECT_EQ(losses[i].value(moved[i]), -g.player(i).payoff(moved));
             }
           });
  EXPECT_EQ(rounds, 15);
}

TEST(Games, PlayerFailureCarriesIndex) {
  const GameSpec g = toy_gan_game();
  // eta far above 2 / beta for every player.
  try {
    simulate(g, tsogd_factory(1e6), 2, 5);
    FAIL();
  } catch (const PlayerFailure& e) {
    EXPECT_EQ(e.player(), 0);
  }
}

TEST(Games, BoundHoldsOnSimulations) {
  for (const GameSpec& g : {bilinear_game(), toy_gan_game()}) {
    for (int w : {1, 5, 10}) {
      const double eta = default_learning_rate(g.max_smoothness());
      const SimulationResult sim = simulate(g, tsogd_factory(eta), w, 4 * w, 1);
      const EquilibriumReport r = best_equilibrium_round(sim.history, g, eta, w, sim.ledgers);
      EXPECT_LE(r.epsilon, r.bound + 1e-9);
      EXPECT_GE(r.round, w);
    }
  }
}

TEST(Games, AlternatingOrderRuns) {
  const SimulationResult sim = simulate(toy_gan_game(), tsogd_factory(1.0), 2, 10, 1, {},
                                        UpdateOrder::kAlternating);
  EXPECT_EQ(sim.history.horizon(), 10);
}
