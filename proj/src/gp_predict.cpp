#include "gmphd_sat/gp_predict.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace gmphd_sat {

namespace {

constexpr double kJitterFactor = 1e-8;

Eigen::MatrixXd kernel_matrix(std::span<const double> t, const GpHyperparams& hp) {
  const auto n = static_cast<Eigen::Index>(t.size());
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    K(i, i) = hp.signal_variance + hp.noise_variance;
    for (Eigen::Index j = 0; j < i; ++j) {
      K(i, j) = K(j, i) = squared_exponential(t[i], t[j], hp);
    }
  }
  return K;
}

// Cholesky with one jittered retry; false when still not positive definite.
bool factor_kernel(Eigen::MatrixXd K, const GpHyperparams& hp, Eigen::LLT<Eigen::MatrixXd>& llt) {
  auto ok = [&] {
    return llt.info() == Eigen::Success && (llt.matrixLLT().diagonal().array() > 0.0).all() &&
           llt.matrixLLT().allFinite();
  };
  llt.compute(K);
  if (ok()) return true;
  K.diagonal().array() += kJitterFactor * hp.signal_variance;
  llt.compute(K);
  return ok();
}

}  // namespace

void GpHyperparams::validate() const {
  if (!(signal_variance > 0.0) || !(length_scale > 0.0) || !(noise_variance >= 0.0)) {
    throw std::invalid_argument(
        "GP hyperparameters need signal_variance > 0, length_scale > 0, noise_variance >= 0");
  }
}

void GpBounds::validate() const {
  auto good = [](double lo, double hi) { return lo > 0.0 && hi >= lo && std::isfinite(hi); };
  if (!good(signal_min, signal_max) || !good(length_min, length_max) || !good(noise_min, noise_max)) {
    throw std::invalid_argument("GP bounds must be positive with min <= max");
  }
  if (grid_points < 2) throw std::invalid_argument("GP grid needs at least 2 points per axis");
}

void GpModel::validate() const {
  if (params.empty()) throw GpError("GP model has no dimensions");
  for (const auto& p : params) p.validate();
  if (times.size() < 2) throw GpError("GP prediction needs a window of at least 2 samples");
  if (values.rows() != static_cast<Eigen::Index>(times.size()) ||
      values.cols() != static_cast<Eigen::Index>(params.size())) {
    throw GpError("GP window values have the wrong shape");
  }
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) throw GpError("GP window times must be strictly increasing");
  }
}

double squared_exponential(double t0, double t1, const GpHyperparams& hp) {
  const double d = (t0 - t1) / hp.length_scale;
  return hp.signal_variance * std::exp(-0.5 * d * d);
}

double log_marginal_likelihood(std::span<const TimedSample> samples, const GpHyperparams& hp) {
  const auto n = static_cast<Eigen::Index>(samples.size());
  std::vector<double> t(samples.size());
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    t[i] = samples[i].time;
    y(i) = samples[i].value;
  }
  y.array() -= y.mean();
  Eigen::LLT<Eigen::MatrixXd> llt;
  if (!factor_kernel(kernel_matrix(t, hp), hp, llt)) {
    return -std::numeric_limits<double>::infinity();
  }
  const Eigen::VectorXd white = llt.matrixL().solve(y);
  return -0.5 * white.squaredNorm() - llt.matrixLLT().diagonal().array().log().sum() -
         0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
}

GpHyperparams fit_hyperparams(std::span<const TimedSample> trainset, const GpBounds& bounds) {
  bounds.validate();
  if (trainset.size() < 5) throw GpError("hyperparameter fit needs at least 5 samples");
  const auto [tmin, tmax] = std::minmax_element(
      trainset.begin(), trainset.end(),
      [](const TimedSample& a, const TimedSample& b) { return a.time < b.time; });
  if (!(tmax->time > tmin->time)) throw GpError("degenerate training set: all times are equal");

  // Work in log space: x = (log signal, log length, log noise).
  using Point = std::array<double, 3>;
  const Point lo{std::log(bounds.signal_min), std::log(bounds.length_min), std::log(bounds.noise_min)};
  const Point hi{std::log(bounds.signal_max), std::log(bounds.length_max), std::log(bounds.noise_max)};
  auto to_params = [](const Point& x) {
    return GpHyperparams{std::exp(x[0]), std::exp(x[1]), std::exp(x[2])};
  };
  auto score = [&](const Point& x) { return log_marginal_likelihood(trainset, to_params(x)); };

  const int g = bounds.grid_points;
  auto grid_value = [&](int axis, int k) {
    return lo[axis] + (hi[axis] - lo[axis]) * static_cast<double>(k) / static_cast<double>(g - 1);
  };

  struct Scored {
    Point x;
    double value;
  };
  std::vector<Scored> grid;
  grid.reserve(static_cast<std::size_t>(g) * g * g);
  for (int a = 0; a < g; ++a) {
    for (int b = 0; b < g; ++b) {
      for (int c = 0; c < g; ++c) {
        Point x{grid_value(0, a), grid_value(1, b), grid_value(2, c)};
        grid.push_back({x, score(x)});
      }
    }
  }
  std::stable_sort(grid.begin(), grid.end(),
                   [](const Scored& l, const Scored& r) { return l.value > r.value; });

  constexpr std::size_t kStarts = 3;
  Scored best = grid.front();
  for (std::size_t s = 0; s < std::min(kStarts, grid.size()); ++s) {
    Scored cur = grid[s];
    Point step;
    for (int axis = 0; axis < 3; ++axis) step[axis] = (hi[axis] - lo[axis]) / (g - 1);
    for (int iter = 0; iter < 500; ++iter) {
      bool improved = false;
      for (int axis = 0; axis < 3; ++axis) {
        for (double dir : {1.0, -1.0}) {
          Point trial = cur.x;
          trial[axis] = std::clamp(trial[axis] + dir * step[axis], lo[axis], hi[axis]);
          if (trial[axis] == cur.x[axis]) continue;
          const double v = score(trial);
          if (v > cur.value) {
            cur = {trial, v};
            improved = true;
          }
        }
      }
      if (!improved) {
        for (double& s2 : step) s2 *= 0.5;
        if (step[0] < 1e-4 && step[1] < 1e-4 && step[2] < 1e-4) break;
      }
    }
    if (cur.value > best.value) best = cur;
  }
  return to_params(best.x);
}

std::vector<GpPrediction> predict_track(const GpModel& model, int horizon) {
  model.validate();
  if (horizon < 1) throw std::invalid_argument("prediction horizon must be positive");
  const auto n = static_cast<Eigen::Index>(model.times.size());
  const auto dims = static_cast<Eigen::Index>(model.params.size());
  const double t_last = model.times.back();

  std::vector<GpPrediction> out(static_cast<std::size_t>(horizon),
                                GpPrediction{Eigen::VectorXd(dims), Eigen::VectorXd(dims),
                                             Eigen::VectorXd(dims)});
  Eigen::LLT<Eigen::MatrixXd> llt;
  Eigen::VectorXd k_star(n);
  for (Eigen::Index d = 0; d < dims; ++d) {
    const GpHyperparams& hp = model.params[static_cast<std::size_t>(d)];
    const double offset = model.values.col(d).mean();
    const Eigen::VectorXd y = model.values.col(d).array() - offset;
    if (!factor_kernel(kernel_matrix(model.times, hp), hp, llt)) {
      throw GpError("GP kernel matrix is singular even after jitter");
    }
    const Eigen::VectorXd alpha = llt.solve(y);
    for (int h = 1; h <= horizon; ++h) {
      const double t = t_last + h;
      for (Eigen::Index i = 0; i < n; ++i) k_star(i) = squared_exponential(t, model.times[i], hp);
      const Eigen::VectorXd v = llt.matrixL().solve(k_star);
      auto& pred = out[static_cast<std::size_t>(h - 1)];
      pred.mean(d) = offset + k_star.dot(alpha);
      const double latent = std::max(0.0, hp.signal_variance - v.squaredNorm());
      pred.latent_variance(d) = latent;
      pred.variance(d) = latent + hp.noise_variance;
    }
  }
  return out;
}

GpModel make_window(std::span<const double> times, std::span<const Eigen::VectorXd> points,
                    const std::vector<GpHyperparams>& params, std::size_t max_window) {
  if (times.size() != points.size()) throw GpError("times and points differ in length");
  const std::size_t count = std::min(max_window, times.size());
  const std::size_t first = times.size() - count;
  GpModel model;
  model.params = params;
  model.times.assign(times.begin() + static_cast<std::ptrdiff_t>(first), times.end());
  model.values.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(params.size()));
  for (std::size_t i = 0; i < count; ++i) {
    const auto& p = points[first + i];
    if (p.size() < static_cast<Eigen::Index>(params.size())) {
      throw GpError("trajectory point has fewer coordinates than GP dimensions");
    }
    model.values.row(static_cast<Eigen::Index>(i)) = p.head(static_cast<Eigen::Index>(params.size()));
  }
  return model;
}

}  // namespace gmphd_sat
