#ifndef GMPHD_SAT_SIM_HPP
#define GMPHD_SAT_SIM_HPP

// Ground-truth world, sensing, the per-step search-and-track pipeline and
// its metrics.

#include "gmphd_sat/geometry.hpp"
#include "gmphd_sat/gp_predict.hpp"
#include "gmphd_sat/phd_filter.hpp"
#include "gmphd_sat/planner.hpp"
#include "gmphd_sat/track.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace gmphd_sat {

using Rng = std::mt19937_64;

enum class InitialEstimate { under, exact, over };
enum class ClutterModel { bernoulli, poisson };

struct GroundTruthTarget {
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  double speed = 0.05;  // m per step
  double heading = 0.0; // radians
};

struct TargetMotion {
  bool stationary = true;
  int direction_period = 400;
};

struct GpSettings {
  bool enabled = false;
  /// Per-dimension hyperparameters; when empty they are fitted at startup.
  std::vector<GpHyperparams> params;
  /// Optional `t,x,y` training trajectory; a synthetic one is generated
  /// from the target motion model when empty.
  std::string training_file;
  std::size_t window = 50;
  /// Refit hyperparameters on each confirmed track's own window.
  bool refit_per_track = false;
  GpBounds bounds;
};

struct ScenarioConfig {
  std::string name = "default";
  std::uint64_t seed = 1;
  long steps = 7278;
  Bounds world;
  int num_targets = 10;
  TargetMotion motion;
  double target_speed = 0.05;
  /// Per-scan clutter rate: Bernoulli probability of one clutter point, or
  /// the Poisson mean, depending on clutter_model.
  double clutter_rate = 0.0;
  ClutterModel clutter_model = ClutterModel::bernoulli;
  InitialEstimate initial_estimate = InitialEstimate::exact;
  double initial_offset = 15.0;    // m
  double initial_variance = 50.0;  // m^2, diagonal
  double robot_speed = 0.5;        // m per step
  double process_noise = 0.01;     // m^2 per step, diagonal
  double survival_prob = 1.0;
  SensorModel sensor;
  FilterConfig filter;
  TrackConfig track;
  PlannerConfig planner;
  GpSettings gp;
  /// Extract targets after this step's births are appended. By default a
  /// birth is first extracted one step later, once it has been updated.
  bool extract_births = false;
  /// Keep per-step robot/measurement/track snapshots in the result.
  bool record_events = true;

  /// Throws std::invalid_argument naming the first inconsistency.
  void validate() const;
};

struct MetricsRecord {
  long step = 0;
  std::size_t n_components = 0;
  std::size_t n_confirmed = 0;
  double sum_w_components = 0.0;
  double sum_w_tracks = 0.0;
  /// Mean over true targets of the Mahalanobis distance to the closest
  /// confirmed track; absent without confirmed tracks.
  std::optional<double> mahal_closest;
  /// Same for the second-closest; absent with fewer than two.
  std::optional<double> mahal_second;
  /// Largest covariance trace among confirmed tracks.
  std::optional<double> worst_track_trace;
};

struct TrackSnapshot {
  std::size_t id = 0;
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d covariance = Eigen::Matrix2d::Identity();
  TrackStatus status = TrackStatus::tentative;
};

struct StepEvent {
  long step = 0;
  Eigen::Vector2d robot = Eigen::Vector2d::Zero();
  std::vector<Eigen::Vector2d> truth;
  std::vector<Eigen::Vector2d> measurements;
  std::vector<TrackSnapshot> tracks;
};

struct ScenarioResult {
  std::vector<MetricsRecord> metrics;
  TrackSet final_tracks;
  Intensityd final_intensity;
  std::vector<StepEvent> events;
};

std::vector<GroundTruthTarget> spawn_targets(const ScenarioConfig& cfg, Rng& rng);

/// Components seeded at true positions displaced by initial_offset in a
/// uniformly random direction. `under` keeps a random half of them, `over`
/// adds half as many uniformly placed decoys.
Intensityd initial_belief(std::span<const GroundTruthTarget> truth, const ScenarioConfig& cfg,
                          Rng& rng);

/// Advances every target by speed along its heading. Headings are redrawn
/// every direction_period steps and whenever the move would leave `world`.
std::vector<GroundTruthTarget> step_world(std::vector<GroundTruthTarget> targets,
                                          const Bounds& world, const TargetMotion& motion,
                                          Rng& rng, long step);

/// Detections of in-FOV targets (noise R) plus uniform clutter in the disk.
std::vector<Eigen::Vector2d> sense(std::span<const GroundTruthTarget> targets,
                                   const SensorModel& sensor, double clutter_rate,
                                   ClutterModel model, Rng& rng);

MetricsRecord compute_metrics(std::span<const Eigen::Vector2d> truth, std::span<const Track> tracks,
                              const Intensityd& intensity, long step = 0);

/// Hyperparameters used for track prediction: cfg.gp.params when given,
/// else fitted on the training file or a synthetic trajectory. Fits are
/// cached per process.
std::vector<GpHyperparams> resolve_gp_params(const ScenarioConfig& cfg);

/// GP predictions for the components that extended confirmed tracks in the
/// previous step. The mean comes from the GP; the covariance is the track's
/// latest covariance grown by the GP latent variance per axis.
PredictionOverrides gp_overrides(std::span<const Track> tracks, std::size_t n_components,
                                 const std::vector<GpHyperparams>& params, const GpSettings& gp);

ScenarioResult run_scenario(const ScenarioConfig& cfg);

}  // namespace gmphd_sat

#endif  // GMPHD_SAT_SIM_HPP
