#include "gmphd_sat/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace gmphd_sat {

void PlannerConfig::validate(double fov_radius) const {
  if (!(lane_spacing > 0.0)) throw std::invalid_argument("lane_spacing must be positive");
  if (lane_spacing > 2.0 * fov_radius + 1e-12) {
    throw std::invalid_argument("lane_spacing exceeds the FOV diameter; sweeps would leave gaps");
  }
  if (!(world.width() > 0.0 && world.height() > 0.0)) {
    throw std::invalid_argument("world bounds must have positive extent");
  }
}

LawnmowerPath::LawnmowerPath(const Bounds& world, double lane_spacing) {
  const int lanes = std::max(1, static_cast<int>(std::ceil(world.height() / lane_spacing - 1e-9)));
  const double spacing = world.height() / lanes;
  std::vector<Eigen::Vector2d> sweep;
  for (int i = 0; i < lanes; ++i) {
    const double y = world.y_min + (i + 0.5) * spacing;
    const bool eastward = i % 2 == 0;
    sweep.emplace_back(eastward ? world.x_min : world.x_max, y);
    sweep.emplace_back(eastward ? world.x_max : world.x_min, y);
  }
  waypoints_ = sweep;
  for (auto it = sweep.rbegin() + 1; it != sweep.rend(); ++it) waypoints_.push_back(*it);

  cumulative_.push_back(0.0);
  for (std::size_t i = 1; i < waypoints_.size(); ++i) {
    cumulative_.push_back(cumulative_.back() + (waypoints_[i] - waypoints_[i - 1]).norm());
  }
}

Eigen::Vector2d LawnmowerPath::point_at(double s) const {
  const double total = cycle_length();
  if (!(total > 0.0)) return waypoints_.front();
  s = std::fmod(s, total);
  if (s < 0.0) s += total;
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
  const auto seg = static_cast<std::size_t>(std::distance(cumulative_.begin(), it)) - 1;
  if (seg + 1 >= waypoints_.size()) return waypoints_.back();
  const double len = cumulative_[seg + 1] - cumulative_[seg];
  const double frac = len > 0.0 ? (s - cumulative_[seg]) / len : 0.0;
  return waypoints_[seg] + frac * (waypoints_[seg + 1] - waypoints_[seg]);
}

double covariance_size(const GaussianComponentd& c, CovarianceMeasure measure) {
  const Eigen::Matrix2d P = c.covariance().topLeftCorner<2, 2>();
  return measure == CovarianceMeasure::trace ? P.trace() : P.determinant();
}

Eigen::Vector2d next_position(const RobotState& robot, const Intensityd& intensity,
                              const PlannerConfig& cfg, long step) {
  Eigen::Vector2d goal;
  if (cfg.strategy == PlannerStrategy::lawnmower || intensity.empty()) {
    const LawnmowerPath path(cfg.world, cfg.lane_spacing);
    goal = path.point_at(static_cast<double>(step) * robot.speed);
  } else if (cfg.strategy == PlannerStrategy::nearest_gaussian) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : intensity) {
      const double d = (c.mean().head<2>() - robot.position).norm();
      if (d < best) {
        best = d;
        goal = c.mean().head<2>();
      }
    }
  } else {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& c : intensity) {
      const double size = covariance_size(c, cfg.covariance_measure);
      if (size > best) {
        best = size;
        goal = c.mean().head<2>();
      }
    }
  }
  return cfg.world.clamp(step_toward(robot.position, cfg.world.clamp(goal), robot.speed));
}

}  // namespace gmphd_sat
