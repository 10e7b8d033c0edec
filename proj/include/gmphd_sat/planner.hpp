#ifndef GMPHD_SAT_PLANNER_HPP
#define GMPHD_SAT_PLANNER_HPP

#include "gmphd_sat/geometry.hpp"
#include "gmphd_sat/gm_core.hpp"

#include <Eigen/Dense>

#include <vector>

namespace gmphd_sat {

enum class PlannerStrategy { lawnmower, nearest_gaussian, largest_gaussian };

/// Scalarisation of "largest covariance".
enum class CovarianceMeasure { trace, determinant };

struct RobotState {
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  double speed = 0.5;  // m per step
};

struct PlannerConfig {
  PlannerStrategy strategy = PlannerStrategy::lawnmower;
  double lane_spacing = 50.0;
  Bounds world;
  CovarianceMeasure covariance_measure = CovarianceMeasure::trace;

  /// Lane spacing must not exceed the FOV diameter.
  void validate(double fov_radius) const;
};

/// Closed boustrophedon cycle: sweep the lanes, then retrace back to the
/// start. Lanes run along x; their count is ceil(height / lane_spacing) and
/// they are spread evenly so the first and last sit half a spacing inside
/// the world.
class LawnmowerPath {
 public:
  LawnmowerPath(const Bounds& world, double lane_spacing);

  const std::vector<Eigen::Vector2d>& waypoints() const { return waypoints_; }
  double cycle_length() const { return cumulative_.back(); }
  /// Point at arc length `s`, wrapping around the cycle.
  Eigen::Vector2d point_at(double s) const;

 private:
  std::vector<Eigen::Vector2d> waypoints_;
  std::vector<double> cumulative_;
};

double covariance_size(const GaussianComponentd& c, CovarianceMeasure measure);

/// Robot position after `step` (1-based). Displacement is at most
/// robot.speed and the result stays inside cfg.world.
Eigen::Vector2d next_position(const RobotState& robot, const Intensityd& intensity,
                              const PlannerConfig& cfg, long step);

}  // namespace gmphd_sat

#endif  // GMPHD_SAT_PLANNER_HPP
