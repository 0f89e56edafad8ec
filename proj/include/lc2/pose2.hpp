#pragma once

#include <cmath>
#include <numbers>

namespace lc2 {

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::fmod(a + std::numbers::pi, two_pi);
  if (r < 0.0) r += two_pi;
  r -= std::numbers::pi;
  if (r <= -std::numbers::pi) r += two_pi;
  return r;
}

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(const Point2& a, const Point2& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

/// Planar rigid-body pose. Heading is kept normalized to (-pi, pi].
struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Pose2() = default;
  Pose2(double x_, double y_, double theta_) : x(x_), y(y_), theta(wrap_angle(theta_)) {}

  Point2 position() const { return {x, y}; }

  Pose2 compose(const Pose2& rel) const {
    const double c = std::cos(theta), s = std::sin(theta);
    return {x + c * rel.x - s * rel.y, y + s * rel.x + c * rel.y, theta + rel.theta};
  }

  Pose2 inverse() const {
    const double c = std::cos(theta), s = std::sin(theta);
    return {-(c * x + s * y), s * x - c * y, -theta};
  }

  /// this^-1 * other
  Pose2 between(const Pose2& other) const { return inverse().compose(other); }

  Point2 transform_from(const Point2& local) const {
    const double c = std::cos(theta), s = std::sin(theta);
    return {x + c * local.x - s * local.y, y + s * local.x + c * local.y};
  }

  Point2 transform_to(const Point2& world) const {
    const double c = std::cos(theta), s = std::sin(theta);
    const double dx = world.x - x, dy = world.y - y;
    return {c * dx + s * dy, -s * dx + c * dy};
  }
};

}  // namespace lc2
