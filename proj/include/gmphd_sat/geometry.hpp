#ifndef GMPHD_SAT_GEOMETRY_HPP
#define GMPHD_SAT_GEOMETRY_HPP

#include <Eigen/Dense>

#include <algorithm>

namespace gmphd_sat {

/// Axis-aligned world rectangle in meters.
struct Bounds {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 150.0;
  double y_max = 150.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }

  bool contains(const Eigen::Vector2d& p, double slack = 0.0) const {
    return p.x() >= x_min - slack && p.x() <= x_max + slack && p.y() >= y_min - slack &&
           p.y() <= y_max + slack;
  }

  Eigen::Vector2d clamp(const Eigen::Vector2d& p) const {
    return {std::clamp(p.x(), x_min, x_max), std::clamp(p.y(), y_min, y_max)};
  }
};

/// Moves from `from` toward `to` by at most `max_step`.
inline Eigen::Vector2d step_toward(const Eigen::Vector2d& from, const Eigen::Vector2d& to,
                                   double max_step) {
  const Eigen::Vector2d delta = to - from;
  const double len = delta.norm();
  if (len <= max_step) return to;
  return from + delta * (max_step / len);
}

}  // namespace gmphd_sat

#endif  // GMPHD_SAT_GEOMETRY_HPP
