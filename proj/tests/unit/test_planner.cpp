#include "gmphd_sat/planner.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace gmphd_sat;
using Eigen::Vector2d;

namespace {

GaussianComponentd comp(Vector2d m, double var) {
  return GaussianComponentd(1.0, m, var * Eigen::MatrixXd::Identity(2, 2));
}

}  // namespace

TEST_CASE("nearest_gaussian at a component mean stays put") {
  PlannerConfig cfg;
  cfg.strategy = PlannerStrategy::nearest_gaussian;
  RobotState robot{{40.0, 60.0}, 0.5};
  const Intensityd v{comp({40.0, 60.0}, 1.0), comp({45.0, 60.0}, 1.0)};
  CHECK((next_position(robot, v, cfg, 7) - robot.position).norm() == 0.0);
}

TEST_CASE("nearest_gaussian heads to the closest mean") {
  PlannerConfig cfg;
  cfg.strategy = PlannerStrategy::nearest_gaussian;
  RobotState robot{{50.0, 50.0}, 0.5};
  const Intensityd v{comp({50.0, 60.0}, 1.0), comp({80.0, 50.0}, 100.0)};
  CHECK((next_position(robot, v, cfg, 1) - Vector2d(50.0, 50.5)).norm() < 1e-12);
}

TEST_CASE("largest_gaussian heads to the largest trace") {
  PlannerConfig cfg;
  cfg.strategy = PlannerStrategy::largest_gaussian;
  RobotState robot{{50.0, 50.0}, 0.5};
  const Intensityd v{comp({40.0, 50.0}, 2.0), comp({50.0, 70.0}, 4.5)};
  const Vector2d next = next_position(robot, v, cfg, 1);
  CHECK((next - Vector2d(50.0, 50.5)).norm() < 1e-12);

  cfg.covariance_measure = CovarianceMeasure::determinant;
  Eigen::Matrix2d thin;
  thin << 8.0, 0.0, 0.0, 0.1;
  const Intensityd w{GaussianComponentd(1.0, Vector2d(40.0, 50.0), Eigen::MatrixXd(thin)),
                     comp({50.0, 70.0}, 1.0)};
  CHECK((next_position(robot, w, cfg, 1) - Vector2d(50.0, 50.5)).norm() < 1e-12);
  CHECK(covariance_size(w[0], CovarianceMeasure::trace) == doctest::Approx(8.1));
}

TEST_CASE("empty intensity falls back to the lawnmower") {
  PlannerConfig cfg;
  cfg.strategy = PlannerStrategy::largest_gaussian;
  const LawnmowerPath path(cfg.world, cfg.lane_spacing);
  RobotState robot{path.point_at(0.0), 0.5};
  CHECK((next_position(robot, {}, cfg, 1) - path.point_at(0.5)).norm() < 1e-12);
}

TEST_CASE("moves are clamped to the speed and to the world") {
  PlannerConfig cfg;
  cfg.strategy = PlannerStrategy::nearest_gaussian;
  RobotState robot{{149.9, 149.9}, 0.5};
  const Intensityd v{comp({400.0, 400.0}, 1.0)};
  const Vector2d next = next_position(robot, v, cfg, 1);
  CHECK(cfg.world.contains(next));
  CHECK((next - robot.position).norm() <= 0.5 + 1e-12);
}

TEST_CASE("lawnmower path over the default world") {
  const Bounds world;
  const LawnmowerPath path(world, 50.0);
  std::set<double> lanes;
  for (const auto& w : path.waypoints()) lanes.insert(w.y());
  CHECK(lanes == std::set<double>{25.0, 75.0, 125.0});
  CHECK(path.cycle_length() == doctest::Approx(1100.0));
  const double steps_per_cycle = path.cycle_length() / 0.5;
  CHECK(3.0 * steps_per_cycle <= 7278.0);
  CHECK((path.point_at(path.cycle_length()) - path.point_at(0.0)).norm() < 1e-9);
  CHECK((path.point_at(150.0) - Vector2d(150.0, 25.0)).norm() < 1e-9);
}

TEST_CASE("lawnmower waypoints are followed step by step") {
  PlannerConfig cfg;
  const LawnmowerPath path(cfg.world, cfg.lane_spacing);
  RobotState robot{path.point_at(0.0), 0.5};
  for (long k = 1; k <= 2200; ++k) {
    const Vector2d next = next_position(robot, {}, cfg, k);
    CHECK((next - robot.position).norm() <= 0.5 + 1e-9);
    robot.position = next;
  }
  CHECK((robot.position - path.point_at(0.0)).norm() < 1e-9);
}

TEST_CASE("planner config validation") {
  PlannerConfig cfg;
  cfg.lane_spacing = 60.0;
  CHECK_THROWS_AS(cfg.validate(25.0), std::invalid_argument);
  cfg.lane_spacing = 0.0;
  CHECK_THROWS_AS(cfg.validate(25.0), std::invalid_argument);
  cfg.lane_spacing = 50.0;
  CHECK_NOTHROW(cfg.validate(25.0));
}
