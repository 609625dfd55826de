#pragma once

#include <cstddef>
#include <optional>

#include <Eigen/Dense>

namespace localregret {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A point of the decision set. Coordinates must be finite.
using Point = Vector;

/// Slack allowed when checking that a point belongs to a body.
inline constexpr double kMembershipTolerance = 1e-9;

/// Throws ArgumentError when any entry is NaN or infinite.
void require_finite(const Vector& v, const char* what);

/// Closed convex decision set with an exact orthogonal projection.
/// Only sets with closed-form projections are supported.
class ConvexBody {
 public:
  enum class Kind { kUnconstrained, kBox, kBall };

  static ConvexBody unconstrained(int dim);
  static ConvexBody box(Vector lower, Vector upper);
  /// Box [-half_width, half_width]^dim.
  static ConvexBody cube(int dim, double half_width);
  static ConvexBody ball(Vector center, double radius);

  Kind kind() const noexcept { return kind_; }
  int dim() const noexcept { return dim_; }
  bool is_unconstrained() const noexcept { return kind_ == Kind::kUnconstrained; }

  const Vector& lower() const noexcept { return a_; }
  const Vector& upper() const noexcept { return b_; }
  const Vector& center() const noexcept { return a_; }
  double radius() const noexcept { return radius_; }

  /// Euclidean projection. Exact for all three kinds.
  Point project(const Vector& x) const;

  /// Distance from x to the body.
  double distance(const Vector& x) const;

  bool contains(const Vector& x, double tolerance = kMembershipTolerance) const;

 private:
  ConvexBody(Kind kind, int dim, Vector a, Vector b, double radius);
  void check_dim(const Vector& x) const;

  Kind kind_;
  int dim_;
  Vector a_;  // lower corner or center
  Vector b_;  // upper corner (box only)
  double radius_ = 0.0;
};

/// (K, eta)-projected gradient: (x - P_K[x - eta * grad]) / eta.
struct ProjectedGradient {
  Vector value;
  double eta = 1.0;

  double norm() const { return value.norm(); }
  double squared_norm() const { return value.squaredNorm(); }
};

/// Requires x in body (within kMembershipTolerance) and eta > 0. On an
/// unconstrained body the raw gradient is returned unchanged.
ProjectedGradient projected_gradient(const ConvexBody& body, double eta,
                                     const Vector& grad, const Point& x);

class LossFunction;

struct StationarySearchResult {
  Point point;
  double projected_gradient_norm = 0.0;
  std::size_t iterations = 0;
  /// false when the iteration budget ran out; `point` is then the iterate
  /// with the smallest projected gradient seen.
  bool converged = false;
};

inline constexpr std::size_t kDefaultStationaryMaxIters = 10'000'000;

/// Projected gradient descent x <- P_K[x - eta grad f(x)] until the
/// projected gradient norm drops to `tolerance`. Needs eta <= 1/beta for
/// monotone descent. `start` defaults to the projection of the origin.
StationarySearchResult find_stationary_point(
    const ConvexBody& body, const LossFunction& f, double eta, double tolerance,
    std::size_t max_iters = kDefaultStationaryMaxIters,
    std::optional<Point> start = std::nullopt);

}  // namespace localregret
