#include "gmphd_sat/phd_filter.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <stdexcept>
#include <string>

namespace gmphd_sat {

namespace {

std::function<void(std::string_view)>& warning_handler() {
  static std::function<void(std::string_view)> handler = [](std::string_view msg) {
    std::cerr << "warning: " << msg << '\n';
  };
  return handler;
}

void warn(std::string_view msg) {
  if (const auto& h = warning_handler()) h(msg);
}

bool in_unit_interval(double p) { return p >= 0.0 && p <= 1.0; }

void require_psd(const Eigen::MatrixXd& m, const char* what) {
  if (m.rows() != m.cols() || !m.allFinite()) {
    throw std::invalid_argument(std::string(what) + " must be a finite square matrix");
  }
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff())) {
    throw std::invalid_argument(std::string(what) + " must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-12) {
    throw std::invalid_argument(std::string(what) + " must be positive semidefinite");
  }
}

GaussianComponentd position_marginal(const GaussianComponentd& c) {
  if (c.dim() == 2) return c;
  if (c.dim() < 2) throw UnsupportedDimension("state must carry a 2-D position");
  return {c.weight(), c.mean().head<2>(), c.covariance().topLeftCorner<2, 2>()};
}

}  // namespace

void set_warning_handler(std::function<void(std::string_view)> handler) {
  warning_handler() = std::move(handler);
}

LinearMotionModel LinearMotionModel::random_walk(Eigen::Index dim, double q, double survival_prob) {
  return {Eigen::MatrixXd::Identity(dim, dim), q * Eigen::MatrixXd::Identity(dim, dim),
          survival_prob};
}

void LinearMotionModel::validate() const {
  if (transition.rows() != transition.cols() || transition.rows() != process_noise.rows()) {
    throw std::invalid_argument("transition and process noise must be square and of equal size");
  }
  require_psd(process_noise, "process noise");
  if (!in_unit_interval(survival_prob)) {
    throw std::invalid_argument("survival probability must lie in [0, 1]");
  }
}

double SensorModel::clutter_intensity() const {
  return clutter_mean / (std::numbers::pi * fov.radius * fov.radius);
}

void SensorModel::validate() const {
  if (!in_unit_interval(p_detect_given_in)) {
    throw std::invalid_argument("p_detect_given_in must lie in [0, 1]");
  }
  if (!(clutter_mean >= 0.0)) throw std::invalid_argument("clutter mean must be nonnegative");
  Eigen::LLT<Eigen::Matrix2d> llt(meas_noise);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("measurement noise must be positive definite");
  }
}

void FilterConfig::validate() const {
  if (!(0.0 <= pd_band_low && pd_band_low <= pd_band_high && pd_band_high <= 1.0)) {
    throw std::invalid_argument("p_D push band must satisfy 0 <= low <= high <= 1");
  }
  if (!(prune_weight < extract_weight)) {
    throw std::invalid_argument("prune weight must be below the extraction weight");
  }
  if (!(merge_threshold >= 0.0)) throw std::invalid_argument("merge threshold must be nonnegative");
  if (max_components == 0) throw std::invalid_argument("max_components must be positive");
  if (!(birth_weight >= 0.0)) throw std::invalid_argument("birth weight must be nonnegative");
  if (!(birth_velocity_variance > 0.0)) {
    throw std::invalid_argument("birth velocity variance must be positive");
  }
}

Intensityd predict(const Intensityd& prior, const LinearMotionModel& model,
                   const PredictionOverrides& overrides) {
  if (!overrides.empty() && overrides.rbegin()->first >= prior.size()) {
    throw std::out_of_range("prediction override refers to component " +
                            std::to_string(overrides.rbegin()->first) + " of " +
                            std::to_string(prior.size()));
  }
  const auto& F = model.transition;
  const auto& Q = model.process_noise;
  Intensityd out;
  out.reserve(prior.size());
  for (std::size_t i = 0; i < prior.size(); ++i) {
    const auto& c = prior[i];
    if (c.dim() != F.rows()) throw InvalidComponent("component dimension does not match motion model");
    const double w = model.survival_prob * c.weight();
    if (auto it = overrides.find(i); it != overrides.end()) {
      out.emplace_back(w, it->second.mean, it->second.covariance + Q);
    } else {
      out.emplace_back(w, F * c.mean(), F * c.covariance() * F.transpose() + Q);
    }
  }
  return out;
}

double detection_probability(const GaussianComponentd& c, const SensorModel& sensor) {
  return prob_detection(position_marginal(c), sensor.fov, sensor.p_detect_given_in);
}

Eigen::Vector2d repulsion_push(const Eigen::Vector2d& mean, const Eigen::Vector2d& robot, double p_d) {
  return p_d * (mean - robot) + mean;
}

Intensityd update(const Intensityd& predicted, std::span<const Eigen::Vector2d> measurements,
                  const SensorModel& sensor, const FilterConfig& cfg) {
  const std::size_t n = predicted.size();
  const Eigen::Vector2d robot = sensor.fov.center;

  if (sensor.world) {
    for (const auto& z : measurements) {
      if (!sensor.world->contains(z)) {
        warn("measurement (" + std::to_string(z.x()) + ", " + std::to_string(z.y()) +
             ") lies outside the world bounds");
      }
    }
  }

  std::vector<double> p_d(n);
  for (std::size_t i = 0; i < n; ++i) p_d[i] = detection_probability(predicted[i], sensor);

  // Per-component Kalman quantities shared across measurements.
  struct Gain {
    Eigen::Vector2d predicted_z;
    Eigen::LLT<Eigen::Matrix2d> innovation;
    double log_norm = 0.0;
    Eigen::MatrixXd gain;
    Eigen::MatrixXd posterior_cov;
  };
  std::vector<Gain> gains(measurements.empty() ? 0 : n);
  for (std::size_t i = 0; i < gains.size(); ++i) {
    const auto& c = predicted[i];
    const Eigen::MatrixXd& P = c.covariance();
    const Eigen::Matrix2d S = P.topLeftCorner<2, 2>() + sensor.meas_noise;
    Gain& g = gains[i];
    g.predicted_z = c.mean().head<2>();
    g.innovation.compute(S);
    g.log_norm = std::log(2.0 * std::numbers::pi) +
                 g.innovation.matrixLLT().diagonal().array().log().sum();
    g.gain = g.innovation.solve(P.leftCols<2>().transpose()).transpose();
    g.posterior_cov = P - g.gain * S * g.gain.transpose();
  }

  auto gated = [&](std::size_t i) {
    for (const auto& z : measurements) {
      const Gain& g = gains[i];
      if (g.innovation.matrixL().solve(z - g.predicted_z).squaredNorm() <= cfg.merge_threshold) {
        return true;
      }
    }
    return false;
  };

  Intensityd out;
  out.reserve(n * (measurements.size() + 1));

  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = predicted[i];
    auto missed = c.with_weight((1.0 - p_d[i]) * c.weight());
    if (cfg.push_enabled && cfg.pd_band_low <= p_d[i] && p_d[i] <= cfg.pd_band_high &&
        (cfg.push_when_gated || !gated(i))) {
      Eigen::VectorXd m = c.mean();
      m.head<2>() = repulsion_push(c.mean().head<2>(), robot, p_d[i]);
      missed = missed.with_mean(std::move(m));
    }
    out.push_back(std::move(missed));
  }
  if (measurements.empty()) return out;

  const double kappa = sensor.clutter_intensity();
  std::vector<double> numer(n);
  for (const auto& z : measurements) {
    double denom = kappa;
    for (std::size_t i = 0; i < n; ++i) {
      const Gain& g = gains[i];
      const Eigen::Vector2d white = g.innovation.matrixL().solve(z - g.predicted_z);
      const double q = std::exp(-0.5 * white.squaredNorm() - g.log_norm);
      numer[i] = p_d[i] * predicted[i].weight() * q;
      denom += numer[i];
    }
    for (std::size_t i = 0; i < n; ++i) {
      const Gain& g = gains[i];
      const double w = denom > 0.0 ? numer[i] / denom : 0.0;
      Eigen::VectorXd m = predicted[i].mean() + g.gain * (z - g.predicted_z);
      out.emplace_back(w, std::move(m), g.posterior_cov);
    }
  }
  return out;
}

std::vector<GaussianComponentd> birth_from_measurements(
    std::span<const Eigen::Vector2d> measurements, const SensorModel& sensor,
    const FilterConfig& cfg, Eigen::Index state_dim) {
  if (state_dim < 2) throw UnsupportedDimension("state must carry a 2-D position");
  Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(state_dim, state_dim) * cfg.birth_velocity_variance;
  cov.topLeftCorner<2, 2>() = sensor.meas_noise;
  std::vector<GaussianComponentd> births;
  births.reserve(measurements.size());
  for (const auto& z : measurements) {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(state_dim);
    m.head<2>() = z;
    births.emplace_back(cfg.birth_weight, std::move(m), cov);
  }
  return births;
}

namespace {

// One greedy pass. Returns true if any group had more than one member.
bool prune_merge_pass(const Intensityd& in, const FilterConfig& cfg, Intensityd& out) {
  std::vector<std::size_t> pool;
  pool.reserve(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (in[i].weight() >= cfg.prune_weight) pool.push_back(i);
  }
  std::stable_sort(pool.begin(), pool.end(),
                   [&](std::size_t a, std::size_t b) { return in[a].weight() > in[b].weight(); });

  bool merged_any = false;
  out.clear();
  std::vector<std::size_t> rest;
  Intensityd group;
  while (!pool.empty() && out.size() < cfg.max_components) {
    const auto& head = in[pool.front()];
    group.clear();
    rest.clear();
    for (std::size_t idx : pool) {
      if (idx == pool.front() || mahalanobis_sq(in[idx].mean(), head) <= cfg.merge_threshold) {
        group.push_back(in[idx]);
      } else {
        rest.push_back(idx);
      }
    }
    merged_any = merged_any || group.size() > 1;
    out.push_back(cfg.merge_rule == MergeRule::moment
                      ? merge_moment(std::span<const GaussianComponentd>(group))
                      : merge_plain_average(std::span<const GaussianComponentd>(group)));
    pool.swap(rest);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.weight() > b.weight(); });
  return merged_any;
}

}  // namespace

Intensityd prune_merge(const Intensityd& v, const FilterConfig& cfg) {
  Intensityd current;
  bool merged = prune_merge_pass(v, cfg, current);
  Intensityd next;
  while (merged) {
    merged = prune_merge_pass(current, cfg, next);
    current.swap(next);
  }
  return current;
}

std::vector<TargetEstimate> extract_targets(const Intensityd& v, const FilterConfig& cfg) {
  std::vector<TargetEstimate> targets;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto& c = v[i];
    if (c.weight() < cfg.extract_weight) continue;
    // A heavy component stands for several targets; round half up.
    const auto copies =
        c.weight() >= 1.5 ? static_cast<std::size_t>(std::floor(c.weight() + 0.5)) : std::size_t{1};
    for (std::size_t k = 0; k < copies; ++k) {
      targets.push_back({c.mean(), c.covariance(), c.weight(), i});
    }
  }
  return targets;
}

}  // namespace gmphd_sat
