#include "gmphd_sat/gp_predict.hpp"

#include "generators.hpp"

#include <doctest.h>

using namespace gmphd_sat;

namespace {

struct Window {
  std::vector<double> times;
  Eigen::MatrixXd values;
};

Window random_window(gen::Rng& rng) {
  Window w;
  const int n = gen::integer(rng, 2, 50);
  double t = gen::uniform(rng, 0.0, 1000.0);
  for (int i = 0; i < n; ++i) {
    w.times.push_back(t);
    t += gen::integer(rng, 0, 4) == 0 ? gen::uniform(rng, 1e-6, 1e-3) : gen::uniform(rng, 0.5, 5.0);
  }
  w.values.resize(n, 2);
  const double a = gen::uniform(rng, -5.0, 5.0);
  const double slope = gen::uniform(rng, -0.5, 0.5);
  for (int i = 0; i < n; ++i) {
    const double dt = w.times[static_cast<std::size_t>(i)] - w.times.front();
    w.values(i, 0) = a + slope * dt + gen::uniform(rng, -1.0, 1.0);
    w.values(i, 1) = std::sin(0.1 * dt) * 3.0 + gen::uniform(rng, -0.5, 0.5);
  }
  return w;
}

GpHyperparams random_params(gen::Rng& rng, bool allow_zero_noise) {
  GpHyperparams hp;
  hp.signal_variance = std::pow(10.0, gen::uniform(rng, -2.0, 3.0));
  hp.length_scale = std::pow(10.0, gen::uniform(rng, 0.0, 2.5));
  hp.noise_variance = allow_zero_noise && gen::integer(rng, 0, 3) == 0 ? 0.0 : std::pow(10.0, gen::uniform(rng, -6.0, 0.5));
  return hp;
}

double kernel_condition(const std::vector<double>& t, const GpHyperparams& hp) {
  const auto n = static_cast<Eigen::Index>(t.size());
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      K(i, j) = squared_exponential(t[static_cast<std::size_t>(i)], t[static_cast<std::size_t>(j)], hp);
    }
  }
  K.diagonal().array() += hp.noise_variance;
  const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(K).eigenvalues();
  return ev.maxCoeff() / std::max(ev.minCoeff(), 1e-300);
}

}  // namespace

TEST_CASE("predictive variance is nondecreasing with the horizon") {
  gen::Rng rng(301);
  for (int i = 0; i < gen::kCases; ++i) {
    const auto w = random_window(rng);
    const GpModel model{{random_params(rng, false), random_params(rng, false)}, w.times, w.values};
    const auto out = predict_track(model, 30);
    for (std::size_t h = 1; h < out.size(); ++h) {
      for (Eigen::Index d = 0; d < 2; ++d) {
        const double scale = model.params[static_cast<std::size_t>(d)].signal_variance;
        CHECK(out[h].variance(d) >= out[h - 1].variance(d) - 1e-9 * scale);
        CHECK(out[h].latent_variance(d) >= out[h - 1].latent_variance(d) - 1e-9 * scale);
      }
    }
  }
}

TEST_CASE("predicted means shift with the training coordinates") {
  gen::Rng rng(302);
  for (int i = 0; i < gen::kCases; ++i) {
    const auto w = random_window(rng);
    const GpModel model{{random_params(rng, false), random_params(rng, false)}, w.times, w.values};
    const Eigen::RowVector2d shift(gen::uniform(rng, -1e3, 1e3), gen::uniform(rng, -1e3, 1e3));
    GpModel moved = model;
    moved.values.rowwise() += shift;
    const auto a = predict_track(model, 10);
    const auto b = predict_track(moved, 10);
    for (std::size_t h = 0; h < a.size(); ++h) {
      for (Eigen::Index d = 0; d < 2; ++d) {
        // Centering rounds at ulp(shift); the solve amplifies that by cond(K).
        const double cond = kernel_condition(w.times, model.params[static_cast<std::size_t>(d)]);
        const double tol = std::max(1e-9, 1e-15 * cond) * (1.0 + std::abs(shift(d)));
        CHECK(std::abs(b[h].mean(d) - a[h].mean(d) - shift(d)) <= tol);
        CHECK(b[h].variance(d) == doctest::Approx(a[h].variance(d)).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("kernel matrix stays usable after jitter") {
  gen::Rng rng(303);
  for (int i = 0; i < gen::kCases; ++i) {
    const auto w = random_window(rng);
    const auto hp = random_params(rng, true);
    std::vector<TimedSample> samples;
    for (std::size_t k = 0; k < w.times.size(); ++k) {
      samples.push_back({w.times[k], w.values(static_cast<Eigen::Index>(k), 0)});
    }
    CHECK(std::isfinite(log_marginal_likelihood(samples, hp)));
    const GpModel model{{hp, hp}, w.times, w.values};
    for (const auto& p : predict_track(model, 5)) {
      CHECK(p.mean.allFinite());
      CHECK((p.variance.array() >= 0.0).all());
      CHECK(p.variance.allFinite());
    }
  }
}
