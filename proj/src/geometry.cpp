#include "localregret/geometry.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "localregret/errors.hpp"
#include "localregret/losses.hpp"

namespace localregret {

void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) {
    throw ArgumentError(std::string(what) + " has non-finite entries");
  }
}

ConvexBody::ConvexBody(Kind kind, int dim, Vector a, Vector b, double radius)
    : kind_(kind), dim_(dim), a_(std::move(a)), b_(std::move(b)), radius_(radius) {}

ConvexBody ConvexBody::unconstrained(int dim) {
  if (dim < 1) throw ArgumentError("body dimension must be >= 1");
  return ConvexBody(Kind::kUnconstrained, dim, Vector(), Vector(), 0.0);
}

ConvexBody ConvexBody::box(Vector lower, Vector upper) {
  if (lower.size() < 1 || lower.size() != upper.size()) {
    throw ArgumentError("box corners must have equal, positive dimension");
  }
  if (lower.hasNaN() || upper.hasNaN()) throw ArgumentError("box corners contain NaN");
  if ((lower.array() > upper.array()).any()) {
    throw ArgumentError("box requires lower <= upper coordinatewise");
  }
  const int n = static_cast<int>(lower.size());
  return ConvexBody(Kind::kBox, n, std::move(lower), std::move(upper), 0.0);
}

ConvexBody ConvexBody::cube(int dim, double half_width) {
  if (dim < 1) throw ArgumentError("body dimension must be >= 1");
  if (!(half_width >= 0.0)) throw ArgumentError("cube half-width must be >= 0");
  return box(Vector::Constant(dim, -half_width), Vector::Constant(dim, half_width));
}

ConvexBody ConvexBody::ball(Vector center, double radius) {
  if (center.size() < 1) throw ArgumentError("ball center must have positive dimension");
  require_finite(center, "ball center");
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw ArgumentError("ball radius must be positive and finite");
  }
  const int n = static_cast<int>(center.size());
  return ConvexBody(Kind::kBall, n, std::move(center), Vector(), radius);
}

void ConvexBody::check_dim(const Vector& x) const {
  if (x.size() != dim_) {
    std::ostringstream os;
    os << "dimension mismatch: body has dimension " << dim_ << ", point has " << x.size();
    throw ArgumentError(os.str());
  }
}

Point ConvexBody::project(const Vector& x) const {
  check_dim(x);
  require_finite(x, "projected point");
  switch (kind_) {
    case Kind::kUnconstrained:
      return x;
    case Kind::kBox:
      return x.cwiseMax(a_).cwiseMin(b_);
    case Kind::kBall: {
      const Vector d = x - a_;
      const double r = d.norm();
      if (r <= radius_) return x;
      return a_ + d * (radius_ / r);
    }
  }
  return x;
}

double ConvexBody::distance(const Vector& x) const {
  check_dim(x);
  switch (kind_) {
    case Kind::kUnconstrained:
      return 0.0;
    case Kind::kBox:
      return (x - x.cwiseMax(a_).cwiseMin(b_)).norm();
    case Kind::kBall:
      return std::max(0.0, (x - a_).norm() - radius_);
  }
  return 0.0;
}

bool ConvexBody::contains(const Vector& x, double tolerance) const {
  return distance(x) <= tolerance;
}

ProjectedGradient projected_gradient(const ConvexBody& body, double eta, const Vector& grad,
                                     const Point& x) {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw ArgumentError("eta must be positive and finite");
  if (grad.size() != body.dim() || x.size() != body.dim()) {
    throw ArgumentError("dimension mismatch in projected_gradient");
  }
  if (body.is_unconstrained()) return {grad, eta};
  const double gap = body.distance(x);
  if (gap > kMembershipTolerance) {
    std::ostringstream os;
    os << "projected_gradient: point lies outside the body (distance " << gap << ")";
    throw PreconditionError(os.str());
  }
  return {(x - body.project(x - eta * grad)) / eta, eta};
}

StationarySearchResult find_stationary_point(const ConvexBody& body, const LossFunction& f,
                                             double eta, double tolerance, std::size_t max_iters,
                                             std::optional<Point> start) {
  if (f.dim() != body.dim()) throw ArgumentError("loss and body dimensions differ");
  if (!(tolerance > 0.0)) throw ArgumentError("tolerance must be positive");
  Point x = start ? body.project(*start) : body.project(Vector::Zero(body.dim()));
  require_finite(x, "start point");

  StationarySearchResult result;
  result.point = x;
  result.projected_gradient_norm = std::numeric_limits<double>::infinity();
  for (std::size_t it = 0;; ++it) {
    const ProjectedGradient pg = projected_gradient(body, eta, f.gradient(x), x);
    const double norm = pg.norm();
    if (norm < result.projected_gradient_norm) {
      result.point = x;
      result.projected_gradient_norm = norm;
    }
    result.iterations = it;
    if (norm <= tolerance) {
      result.converged = true;
      return result;
    }
    if (it == max_iters) return result;
    x = body.project(x - eta * pg.value);
  }
}

}  // namespace localregret
