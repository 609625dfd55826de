#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "localregret/errors.hpp"
#include "localregret/geometry.hpp"
#include "localregret/losses.hpp"
#include "test_support.hpp"

using namespace localregret;
using lrtest::random_body;
using lrtest::uniform_vector;

namespace {

Vector v2(double a, double b) { return Vector{{a, b}}; }
Vector v1(double a) { return Vector{{a}}; }

// Ball projection in the plane by minimising over the boundary circle.
Vector circle_projection_oracle(const Vector& c, double r, const Vector& x) {
  if ((x - c).norm() <= r) return x;
  auto dist = [&](double th) {
    return (c + r * v2(std::cos(th), std::sin(th)) - x).squaredNorm();
  };
  double best = 0.0;
  double best_d = dist(0.0);
  const int grid = 20000;
  for (int k = 1; k < grid; ++k) {
    const double th = 2.0 * std::numbers::pi * k / grid;
    if (dist(th) < best_d) {
      best_d = dist(th);
      best = th;
    }
  }
  // bisection on the stationarity condition (c - x) . u'(th) = 0 near the grid minimum
  auto slope = [&](double th) { return (c - x).dot(v2(-std::sin(th), std::cos(th))); };
  double a = best - 2.0 * std::numbers::pi / grid, b = best + 2.0 * std::numbers::pi / grid;
  for (int it = 0; it < 200 && slope(a) * slope(b) < 0; ++it) {
    const double m = 0.5 * (a + b);
    if ((slope(m) < 0) == (slope(a) < 0)) a = m; else b = m;
  }
  const double th = 0.5 * (a + b);
  return c + r * v2(std::cos(th), std::sin(th));
}

}  // namespace

TEST(Project, Examples) {
  EXPECT_EQ(ConvexBody::unconstrained(2).project(v2(5, -3)), v2(5, -3));
  EXPECT_EQ(ConvexBody::box(v2(-1, -1), v2(1, 1)).project(v2(2, 0.5)), v2(1, 0.5));
  const Vector p = ConvexBody::ball(Vector::Zero(2), 1.0).project(v2(3, 4));
  EXPECT_NEAR(p[0], 0.6, 1e-15);
  EXPECT_NEAR(p[1], 0.8, 1e-15);
  EXPECT_LT((p - circle_projection_oracle(Vector::Zero(2), 1.0, v2(3, 4))).norm(), 1e-9);
}

TEST(Project, BallMatchesOracle) {
  std::mt19937_64 rng(7);
  for (int k = 0; k < 50; ++k) {
    const Vector c = uniform_vector(rng, 2, -2, 2);
    const double r = std::uniform_real_distribution<double>(0.2, 2.0)(rng);
    const Vector x = uniform_vector(rng, 2, -6, 6);
    const Vector p = ConvexBody::ball(c, r).project(x);
    EXPECT_LT((p - circle_projection_oracle(c, r, x)).norm(), 1e-9);
  }
}

TEST(Project, DimensionMismatchAndInvalidBodies) {
  EXPECT_THROW(ConvexBody::box(v2(-1, -1), v2(1, 1)).project(v1(0)), ArgumentError);
  EXPECT_THROW(ConvexBody::box(v2(1, -1), v2(0, 1)), ArgumentError);
  EXPECT_THROW(ConvexBody::ball(v2(0, 0), 0.0), ArgumentError);
  EXPECT_THROW(ConvexBody::unconstrained(2).project(v2(NAN, 0)), ArgumentError);
}

TEST(Project, IdempotentAndFeasible) {
  std::mt19937_64 rng(11);
  for (int k = 0; k < 1000; ++k) {
    const int n = 1 + static_cast<int>(rng() % 6);
    const ConvexBody body = random_body(rng, n);
    const Vector x = uniform_vector(rng, n, -8, 8);
    const Vector p = body.project(x);
    EXPECT_TRUE(body.contains(p));
    EXPECT_LT((body.project(p) - p).norm(), 1e-12);
  }
}

TEST(ProjectedGradient, Examples) {
  EXPECT_EQ(projected_gradient(ConvexBody::unconstrained(1), 0.1, v1(6), v1(3)).value, v1(6));
  const ConvexBody unit = ConvexBody::cube(1, 1.0);
  EXPECT_EQ(projected_gradient(unit, 0.5, v1(-1), v1(1)).value[0], 0.0);
  EXPECT_DOUBLE_EQ(projected_gradient(unit, 1.0, v1(2), v1(0.5)).value[0], 1.5);
}

TEST(ProjectedGradient, Preconditions) {
  const ConvexBody unit = ConvexBody::cube(1, 1.0);
  EXPECT_THROW(projected_gradient(unit, 1.0, v1(1), v1(1.1)), PreconditionError);
  EXPECT_NO_THROW(projected_gradient(unit, 1.0, v1(1), v1(1.0 + 5e-10)));
  EXPECT_THROW(projected_gradient(unit, 0.0, v1(1), v1(0)), ArgumentError);
}

TEST(ProjectedGradient, StepStaysFeasibleAndDominated) {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 1000; ++k) {
    const int n = 1 + static_cast<int>(rng() % 5);
    const ConvexBody body = random_body(rng, n);
    const Vector x = body.project(uniform_vector(rng, n, -5, 5));
    const Vector g = uniform_vector(rng, n, -10, 10);
    const double eta = std::uniform_real_distribution<double>(1e-3, 2.0)(rng);
    const auto pg = projected_gradient(body, eta, g, x);
    EXPECT_TRUE(body.contains(x - eta * pg.value, 1e-9));
    EXPECT_LE(pg.norm(), g.norm() + 1e-12);
  }
}

TEST(FindStationaryPoint, QuadraticOnBox) {
  const ConvexBody box = ConvexBody::box(v2(-1, -1), v2(1, 1));
  const LossFunction f = builtin_loss("quadratic", std::vector<double>{1.0}, 2);
  const auto r = find_stationary_point(box, f, 0.25, 1e-8, 100000, v2(0.5, 0.5));
  EXPECT_TRUE(r.converged);
  EXPECT_LE(r.projected_gradient_norm, 1e-8);
  EXPECT_LT(r.point.norm(), 1e-8);
}

TEST(FindStationaryPoint, BoundaryMaximiser) {
  const ConvexBody unit = ConvexBody::cube(1, 1.0);
  const LossFunction f = builtin_loss("linear", std::vector<double>{-1.0}, 1);
  const auto r = find_stationary_point(unit, f, 1.0, 1e-12);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.point[0], 1.0);
  EXPECT_EQ(r.projected_gradient_norm, 0.0);
}

TEST(FindStationaryPoint, BudgetExhaustedIsReported) {
  const LossFunction f = builtin_loss("quadratic", std::vector<double>{1.0}, 1, 10.0);
  const auto r = find_stationary_point(ConvexBody::cube(1, 10.0), f, 0.01, 1e-14, 3, v1(9.0));
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations, 3u);
  EXPECT_GT(r.projected_gradient_norm, 1e-14);
}

TEST(FindStationaryPoint, SineOnIntervalAgainstGrid) {
  // f(x) = sin(3x) + x^2/2 on [-2, 2].
  const ConvexBody body = ConvexBody::cube(1, 2.0);
  const LossFunction f = builtin_loss("sine_mix", std::vector<double>{3.0, 1.0}, 1, 2.0);
  auto df = [](double x) { return 3.0 * std::cos(3.0 * x) + x; };

  std::vector<double> stationary;
  const double h = 1e-4;
  for (double x = -2.0; x < 2.0 - 0.5 * h; x += h) {
    if (df(x) == 0.0 || (df(x) > 0) != (df(x + h) > 0)) stationary.push_back(x + 0.5 * h);
  }
  if (df(-2.0) > 0) stationary.push_back(-2.0);
  if (df(2.0) < 0) stationary.push_back(2.0);
  ASSERT_FALSE(stationary.empty());

  const double eta = 1.0 / f.constants().smoothness;
  for (double start : {-1.9, -0.7, 0.0, 0.4, 1.3, 2.0}) {
    const auto r = find_stationary_point(body, f, eta, 1e-6, kDefaultStationaryMaxIters, v1(start));
    ASSERT_TRUE(r.converged);
    const double x = r.point[0];
    const double fd = (f.value(v1(std::min(x + 1e-7, 2.0))) - f.value(v1(std::max(x - 1e-7, -2.0)))) /
                      (std::min(x + 1e-7, 2.0) - std::max(x - 1e-7, -2.0));
    EXPECT_LE(projected_gradient(body, eta, v1(fd), r.point).norm(), 2e-6);
    double nearest = 1e9;
    for (double s : stationary) nearest = std::min(nearest, std::abs(s - x));
    EXPECT_LT(nearest, 1e-3) << "start " << start << " ended at " << x;
  }
}

TEST(Properties, Nonexpansive) {
  std::mt19937_64 rng(101);
  for (int k = 0; k < 1000; ++k) {
    const int n = 1 + static_cast<int>(rng() % 6);
    const ConvexBody body = random_body(rng, n);
    const Vector u = uniform_vector(rng, n, -6, 6), v = uniform_vector(rng, n, -6, 6);
    EXPECT_LE((body.project(u) - body.project(v)).norm(), (u - v).norm() + 1e-12);
  }
}

TEST(Properties, GeneralizedPythagorean) {
  std::mt19937_64 rng(102);
  for (int k = 0; k < 1000; ++k) {
    const int n = 1 + static_cast<int>(rng() % 6);
    const ConvexBody body = random_body(rng, n);
    const Vector x = uniform_vector(rng, n, -8, 8);
    const Vector y = body.project(uniform_vector(rng, n, -8, 8));
    const Vector p = body.project(x);
    EXPECT_GE((p - y).dot(x - p), -1e-12);
  }
}
