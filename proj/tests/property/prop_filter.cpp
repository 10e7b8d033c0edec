#include "gmphd_sat/phd_filter.hpp"

#include "generators.hpp"

#include <doctest.h>

using namespace gmphd_sat;
using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::VectorXd;

namespace {

SensorModel sensor_at(const Vector2d& c, double r, double p_in = 0.98, double clutter = 0.0) {
  SensorModel s;
  s.fov = FovDiskd(c, r);
  s.p_detect_given_in = p_in;
  s.clutter_mean = clutter;
  return s;
}

}  // namespace

TEST_CASE("update preserves total weight when nothing can be detected") {
  gen::Rng rng(201);
  for (int i = 0; i < gen::kCases; ++i) {
    const auto sensor = sensor_at(gen::point(rng, 0.0, 150.0), gen::uniform(rng, 5.0, 30.0));
    Intensityd v;
    const int n = gen::integer(rng, 1, 20);
    while (static_cast<int>(v.size()) < n) {
      auto c = gen::component2(rng, -300.0, 450.0, 0.2, 5.0);
      if (detection_probability(c, sensor) < 1e-12) v.push_back(std::move(c));
    }
    const auto model = LinearMotionModel::random_walk(2, gen::uniform(rng, 1e-4, 1.0), 1.0);
    Intensityd predicted = predict(v, model);
    std::erase_if(predicted, [&](const auto& c) { return detection_probability(c, sensor) >= 1e-12; });
    const auto out = update(predicted, {}, sensor, FilterConfig{});
    REQUIRE(out.size() == predicted.size());
    CHECK(expected_cardinality(out) == doctest::Approx(expected_cardinality(predicted)).epsilon(1e-9));
  }
}

TEST_CASE("each measurement adds at most one expected target") {
  gen::Rng rng(202);
  for (int i = 0; i < gen::kCases; ++i) {
    const Vector2d center = gen::point(rng, 20.0, 130.0);
    const double r = gen::uniform(rng, 10.0, 30.0);
    const auto sensor = sensor_at(center, r, gen::uniform(rng, 0.5, 1.0), gen::uniform(rng, 0.0, 2.0));
    const auto v = gen::intensity2(rng, gen::integer(rng, 1, 12), center.x() - 40.0, center.x() + 40.0, 0.5, 6.0);
    std::vector<Vector2d> zs;
    for (int k = gen::integer(rng, 1, 5); k > 0; --k) zs.push_back(gen::in_disk(rng, center, r));
    const auto out = update(v, zs, sensor, FilterConfig{});
    const std::size_t n = v.size();
    REQUIRE(out.size() == n * (zs.size() + 1));
    const double kappa = sensor.clutter_intensity();
    for (std::size_t j = 0; j < zs.size(); ++j) {
      double got = 0.0;
      for (std::size_t k = 0; k < n; ++k) got += out[n * (j + 1) + k].weight();
      double num = 0.0;
      for (const auto& c : v) {
        const MatrixXd S = c.covariance() + sensor.meas_noise;
        num += detection_probability(c, sensor) * c.weight() * oracle::naive_density(zs[j], c.mean(), S);
      }
      CHECK(got <= 1.0 + 1e-12);
      CHECK(got == doctest::Approx(num / (kappa + num)).epsilon(1e-9));
    }
  }
}

TEST_CASE("certain detection tracks a Kalman filter for 100 steps") {
  gen::Rng rng(203);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int i = 0; i < gen::kCases; ++i) {
    auto sensor = sensor_at(Vector2d::Zero(), 25.0, 1.0);
    sensor.meas_noise = oracle::random_spd2(rng, 0.3, 1.2);
    const double q = gen::uniform(rng, 1e-3, 0.1);
    const auto model = LinearMotionModel::random_walk(2, q, 1.0);
    const Vector2d x0 = gen::point(rng, -3.0, 3.0);
    const Eigen::Matrix2d P0 = oracle::random_spd2(rng, 0.3, 1.5);
    Intensityd v{GaussianComponentd(1.0, x0, P0)};
    oracle::Kalman kf{VectorXd(x0), MatrixXd(P0)};
    const Eigen::LLT<Eigen::Matrix2d> noise(sensor.meas_noise);
    const Vector2d truth = gen::point(rng, -2.0, 2.0);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
      v = predict(v, model);
      kf.predict(MatrixXd::Identity(2, 2), model.process_noise);
      const Vector2d z = truth + noise.matrixL() * Vector2d(g(rng), g(rng));
      const std::vector<Vector2d> zs{z};
      const auto out = update(v, zs, sensor, FilterConfig{});
      REQUIRE(out.size() == 2);
      REQUIRE(out[0].weight() == 0.0);
      kf.update(z, MatrixXd::Identity(2, 2), sensor.meas_noise);
      v = {out[1]};
      worst = std::max({worst, (v[0].mean() - kf.x).cwiseAbs().maxCoeff(),
                        (v[0].covariance() - kf.P).cwiseAbs().maxCoeff(), std::abs(v[0].weight() - 1.0)});
    }
    CHECK(worst <= 1e-9);
  }
}

TEST_CASE("prune_merge is idempotent") {
  gen::Rng rng(204);
  for (int i = 0; i < gen::kCases; ++i) {
    FilterConfig cfg;
    cfg.max_components = static_cast<std::size_t>(gen::integer(rng, 5, 100));
    cfg.merge_rule = gen::integer(rng, 0, 1) == 0 ? MergeRule::moment : MergeRule::plain_average;
    Intensityd v;
    const double spread = gen::uniform(rng, 5.0, 150.0);
    for (int k = gen::integer(rng, 0, 60); k > 0; --k) {
      auto c = gen::component2(rng, 0.0, spread, 0.3, 8.0);
      if (gen::integer(rng, 0, 3) == 0) c = c.with_weight(gen::uniform(rng, 0.0, 2e-3));
      v.push_back(std::move(c));
    }
    const auto once = prune_merge(v, cfg);
    const auto twice = prune_merge(once, cfg);
    REQUIRE(once.size() == twice.size());
    for (std::size_t k = 0; k < once.size(); ++k) {
      CHECK(std::abs(once[k].weight() - twice[k].weight()) <= 1e-12);
      CHECK((once[k].mean() - twice[k].mean()).cwiseAbs().maxCoeff() <= 1e-12);
      CHECK((once[k].covariance() - twice[k].covariance()).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("repulsion never moves a mean toward the robot") {
  gen::Rng rng(205);
  for (int i = 0; i < 10 * gen::kCases; ++i) {
    const Vector2d robot = gen::point(rng, 0.0, 150.0);
    const Vector2d mean = gen::integer(rng, 0, 20) == 0 ? robot : gen::point(rng, -50.0, 200.0);
    const double pd = gen::integer(rng, 0, 10) == 0 ? 0.0 : gen::uniform(rng, 0.0, 1.0);
    const Vector2d pushed = repulsion_push(mean, robot, pd);
    CHECK((pushed - robot).norm() >= (mean - robot).norm() * (1.0 - 1e-15));
    CHECK(pushed.allFinite());
  }
}

TEST_CASE("update output holds n * (|Z| + 1) components") {
  gen::Rng rng(206);
  for (int i = 0; i < gen::kCases; ++i) {
    const Vector2d center = gen::point(rng, 0.0, 150.0);
    FilterConfig cfg;
    cfg.push_enabled = gen::integer(rng, 0, 1) == 1;
    cfg.push_when_gated = gen::integer(rng, 0, 1) == 1;
    const auto sensor = sensor_at(center, 25.0, 0.98, gen::uniform(rng, 0.0, 1.0));
    const int n = gen::integer(rng, 0, 15);
    const auto v = gen::intensity2(rng, n, center.x() - 50.0, center.x() + 50.0, 0.5, 10.0);
    std::vector<Vector2d> zs;
    for (int k = gen::integer(rng, 0, 6); k > 0; --k) zs.push_back(gen::in_disk(rng, center, 25.0));
    CHECK(update(v, zs, sensor, cfg).size() == v.size() * (zs.size() + 1));
  }
}
