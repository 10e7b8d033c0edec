#ifndef GMPHD_SAT_PHD_FILTER_HPP
#define GMPHD_SAT_PHD_FILTER_HPP

// GM-PHD recursion for a mobile sensor with a circular field of view.
//
// The filter state is a value (an Intensityd) threaded through free
// functions; nothing here holds mutable state between calls.

#include "gmphd_sat/geometry.hpp"
#include "gmphd_sat/gm_core.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace gmphd_sat {

struct LinearMotionModel {
  Eigen::MatrixXd transition;
  Eigen::MatrixXd process_noise;
  double survival_prob = 1.0;

  /// x_k = x_{k-1} + noise, i.e. F = I and Q = q * I.
  static LinearMotionModel random_walk(Eigen::Index dim, double q, double survival_prob = 1.0);

  void validate() const;
};

struct SensorModel {
  FovDiskd fov{Eigen::Vector2d::Zero(), 25.0};
  double p_detect_given_in = 0.98;
  Eigen::Matrix2d meas_noise = Eigen::Matrix2d::Identity();
  /// Expected clutter points per scan, spread uniformly over the disk.
  double clutter_mean = 0.0;
  /// When set, measurements outside it raise a warning.
  std::optional<Bounds> world;

  double clutter_intensity() const;
  void validate() const;
};

enum class MergeRule { moment, plain_average };

struct FilterConfig {
  double pd_band_low = 0.4;
  double pd_band_high = 0.6;
  double prune_weight = 1e-3;
  /// Squared Mahalanobis distance under the selected component's covariance.
  double merge_threshold = 10.0;
  std::size_t max_components = 100;
  double extract_weight = 0.5;
  double birth_weight = 1.0;
  /// Velocity prior variance for births when the state carries velocity.
  double birth_velocity_variance = 1.0;
  bool push_enabled = true;
  /// Also push components that have a measurement within merge_threshold
  /// (squared Mahalanobis under the innovation covariance). When false
  /// only components with no such measurement are pushed.
  bool push_when_gated = false;
  MergeRule merge_rule = MergeRule::moment;

  void validate() const;
};

struct TargetEstimate {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  double weight = 0.0;
  /// Index of the component it was extracted from.
  std::size_t component = 0;
};

/// Externally predicted mean/covariance for one component; process noise is
/// added on top of `covariance` by predict().
struct PredictedState {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

using PredictionOverrides = std::map<std::size_t, PredictedState>;

Intensityd predict(const Intensityd& prior, const LinearMotionModel& model,
                   const PredictionOverrides& overrides = {});

/// Position-space detection probability of a component of any dimension
/// whose first two coordinates are position.
double detection_probability(const GaussianComponentd& c, const SensorModel& sensor);

/// No-detection copies (weight scaled by 1 - p_D, mean pushed inside the
/// p_D band, see FilterConfig::push_when_gated) followed by one Kalman-updated copy per component for each
/// measurement. Output size is n * (|Z| + 1).
Intensityd update(const Intensityd& predicted, std::span<const Eigen::Vector2d> measurements,
                  const SensorModel& sensor, const FilterConfig& cfg);

Eigen::Vector2d repulsion_push(const Eigen::Vector2d& mean, const Eigen::Vector2d& robot, double p_d);

std::vector<GaussianComponentd> birth_from_measurements(
    std::span<const Eigen::Vector2d> measurements, const SensorModel& sensor,
    const FilterConfig& cfg, Eigen::Index state_dim = 2);

/// Threshold pruning followed by greedy merging around the heaviest
/// remaining component, capped at cfg.max_components. The greedy pass is
/// repeated until it merges nothing, so the result is a fixed point.
/// Output is sorted by descending weight.
Intensityd prune_merge(const Intensityd& v, const FilterConfig& cfg);

std::vector<TargetEstimate> extract_targets(const Intensityd& v, const FilterConfig& cfg);

/// Sink for non-fatal filter warnings; defaults to stderr. Pass an empty
/// function to silence.
void set_warning_handler(std::function<void(std::string_view)> handler);

}  // namespace gmphd_sat

#endif  // GMPHD_SAT_PHD_FILTER_HPP
