#include "gmphd_sat/gp_predict.hpp"

#include "../support/oracles.hpp"

#include <doctest.h>

#include <random>

using namespace gmphd_sat;

namespace {

std::vector<TimedSample> samples(const std::vector<double>& t, const std::vector<double>& y) {
  std::vector<TimedSample> s;
  for (std::size_t i = 0; i < t.size(); ++i) s.push_back({t[i], y[i]});
  return s;
}

std::vector<double> steps(double from, int n) {
  std::vector<double> t;
  for (int i = 0; i < n; ++i) t.push_back(from + i);
  return t;
}

GpModel model_1d(const std::vector<double>& t, const std::vector<double>& y, GpHyperparams hp) {
  GpModel m;
  m.params = {hp};
  m.times = t;
  m.values.resize(static_cast<Eigen::Index>(y.size()), 1);
  for (std::size_t i = 0; i < y.size(); ++i) m.values(static_cast<Eigen::Index>(i), 0) = y[i];
  return m;
}

}  // namespace

TEST_CASE("squared exponential kernel") {
  GpHyperparams hp{2.0, 5.0, 0.1};
  CHECK(squared_exponential(3.0, 3.0, hp) == 2.0);
  CHECK(squared_exponential(0.0, 5.0, hp) == doctest::Approx(2.0 * std::exp(-0.5)));
}

TEST_CASE("log marginal likelihood matches the explicit formula") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> g(0.0, 1.0);
  const auto t = steps(0.0, 20);
  std::vector<double> y;
  for (double ti : t) y.push_back(std::sin(ti / 4.0) + 0.1 * g(rng));
  for (GpHyperparams hp : {GpHyperparams{1.0, 3.0, 0.01}, GpHyperparams{0.3, 10.0, 0.5}}) {
    CHECK(log_marginal_likelihood(samples(t, y), hp) ==
          doctest::Approx(oracle::naive_gp_lml(t, y, hp.signal_variance, hp.length_scale, hp.noise_variance))
              .epsilon(1e-8));
  }
}

TEST_CASE("constant trajectory fits to the smallest noise and predicts the constant") {
  const auto t = steps(0.0, 20);
  const std::vector<double> y(t.size(), 4.25);
  const GpBounds bounds;
  const auto hp = fit_hyperparams(samples(t, y), bounds);
  CHECK(hp.noise_variance == doctest::Approx(bounds.noise_min).epsilon(1e-9));
  const auto pred = predict_track(model_1d(t, y, hp), 3);
  for (const auto& p : pred) CHECK(p.mean(0) == doctest::Approx(4.25).epsilon(1e-12));
}

TEST_CASE("noisy ramp predictions stay within three sigma") {
  std::mt19937_64 rng(32);
  std::normal_distribution<double> g(0.0, 0.1);
  const auto t = steps(0.0, 60);
  const auto truth = oracle::line(2.0, 0.05, t);
  std::vector<double> y;
  for (double v : truth) y.push_back(v + g(rng));
  const std::vector<double> train_t(t.begin(), t.begin() + 50);
  const std::vector<double> train_y(y.begin(), y.begin() + 50);
  const auto hp = fit_hyperparams(samples(train_t, train_y));
  const auto pred = predict_track(model_1d(train_t, train_y, hp), 3);
  for (int h = 0; h < 3; ++h) {
    CHECK(std::abs(pred[static_cast<std::size_t>(h)].mean(0) - truth[50 + static_cast<std::size_t>(h)]) <= 0.3);
  }
}

TEST_CASE("fit never scores below any point of the grid") {
  std::mt19937_64 rng(33);
  std::normal_distribution<double> g(0.0, 0.3);
  const auto t = steps(0.0, 30);
  auto y = oracle::sine(3.0, 40.0, t);
  for (double& v : y) v += g(rng);
  GpBounds b;
  b.grid_points = 7;
  const auto hp = fit_hyperparams(samples(t, y), b);
  const double fitted = oracle::naive_gp_lml(t, y, hp.signal_variance, hp.length_scale, hp.noise_variance);
  const double best = oracle::grid_rescan_best(t, y, b.signal_min, b.signal_max, b.length_min,
                                               b.length_max, b.noise_min, b.noise_max, b.grid_points);
  CHECK(fitted >= best - 1e-6 * std::abs(best));
  CHECK(hp.signal_variance >= b.signal_min);
  CHECK(hp.length_scale <= b.length_max);
}

TEST_CASE("fit is deterministic") {
  const auto t = steps(0.0, 15);
  const auto y = oracle::sine(1.0, 20.0, t);
  const auto a = fit_hyperparams(samples(t, y));
  const auto b = fit_hyperparams(samples(t, y));
  CHECK(a.signal_variance == b.signal_variance);
  CHECK(a.length_scale == b.length_scale);
  CHECK(a.noise_variance == b.noise_variance);
}

TEST_CASE("fit errors") {
  const std::vector<TimedSample> few{{0, 1}, {1, 2}, {2, 3}, {3, 4}};
  CHECK_THROWS_AS(fit_hyperparams(few), GpError);
  const std::vector<TimedSample> same_time(6, TimedSample{2.0, 1.0});
  CHECK_THROWS_AS(fit_hyperparams(same_time), GpError);
  GpBounds bad;
  bad.length_min = 10.0;
  bad.length_max = 1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("identical window points predict that point") {
  const auto t = steps(10.0, 8);
  const std::vector<double> y(t.size(), -3.0);
  const GpHyperparams hp{1.0, 5.0, 0.04};
  const auto pred = predict_track(model_1d(t, y, hp), 5);
  for (const auto& p : pred) {
    CHECK(p.mean(0) == doctest::Approx(-3.0).epsilon(1e-12));
    CHECK(p.variance(0) >= hp.noise_variance);
    CHECK(p.variance(0) == doctest::Approx(p.latent_variance(0) + hp.noise_variance));
  }
}

TEST_CASE("noiseless line with a long length scale extrapolates linearly") {
  const auto t = steps(0.0, 20);
  const auto y = oracle::line(1.0, 0.3, t);
  const GpHyperparams hp{100.0, 200.0, 1e-8};
  const auto pred = predict_track(model_1d(t, y, hp), 1);
  CHECK(std::abs(pred[0].mean(0) - (1.0 + 0.3 * 20.0)) < 1e-2);
}

TEST_CASE("sine trajectory: GP beats linear extrapolation over ten steps") {
  const auto t = steps(0.0, 60);
  const auto y = oracle::sine(5.0, 100.0, t);
  const std::vector<double> train_t(t.begin(), t.begin() + 50);
  const std::vector<double> train_y(y.begin(), y.begin() + 50);
  const auto hp = fit_hyperparams(samples(train_t, train_y));
  const auto pred = predict_track(model_1d(train_t, train_y, hp), 10);
  const double slope = train_y[49] - train_y[48];
  double se_gp = 0.0;
  double se_lin = 0.0;
  for (int h = 1; h <= 10; ++h) {
    const double truth = y[static_cast<std::size_t>(49 + h)];
    se_gp += std::pow(pred[static_cast<std::size_t>(h - 1)].mean(0) - truth, 2);
    se_lin += std::pow(train_y[49] + slope * h - truth, 2);
  }
  CHECK(std::sqrt(se_gp / 10.0) < std::sqrt(se_lin / 10.0));
}

TEST_CASE("predict_track errors") {
  const GpHyperparams hp;
  CHECK_THROWS_AS(predict_track(model_1d({1.0}, {2.0}, hp), 1), GpError);
  CHECK_THROWS_AS(predict_track(model_1d({1.0, 1.0, 2.0}, {2.0, 2.0, 3.0}, hp), 1), GpError);
  CHECK_THROWS_AS(predict_track(model_1d({1.0, 2.0}, {2.0, 3.0}, hp), 0), std::invalid_argument);
  GpModel empty = model_1d({1.0, 2.0}, {2.0, 3.0}, hp);
  empty.params.clear();
  CHECK_THROWS_AS(predict_track(empty, 1), GpError);
}

TEST_CASE("make_window keeps the most recent points") {
  std::vector<double> t;
  std::vector<Eigen::VectorXd> pts;
  for (int i = 0; i < 80; ++i) {
    t.push_back(i);
    pts.push_back(Eigen::Vector2d(i, -i));
  }
  const auto m = make_window(t, pts, {GpHyperparams{}, GpHyperparams{}}, 50);
  CHECK(m.times.size() == 50);
  CHECK(m.times.front() == 30.0);
  CHECK(m.values(49, 1) == -79.0);
}
