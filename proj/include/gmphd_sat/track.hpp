#ifndef GMPHD_SAT_TRACK_HPP
#define GMPHD_SAT_TRACK_HPP

#include "gmphd_sat/phd_filter.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace gmphd_sat {

enum class TrackStatus { tentative, confirmed };

const char* to_string(TrackStatus s);

struct TrackPoint {
  long step = 0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  double weight = 0.0;
};

struct Track {
  std::size_t id = 0;
  std::vector<TrackPoint> history;
  TrackStatus status = TrackStatus::tentative;
  /// Consecutive steps without an associated target.
  int coast = 0;
  /// Component (in the intensity of the step it was last extended) that
  /// produced the latest point; empty while coasting.
  std::optional<std::size_t> source_component;

  std::size_t life_length() const { return history.size(); }
  const TrackPoint& latest() const { return history.back(); }
};

struct TrackConfig {
  std::size_t l_threshold = 3;
  /// Squared Mahalanobis gate; same value as the merge threshold.
  double gate = 10.0;
  int max_coast = 10;

  void validate() const;
};

/// Live tracks in ascending id order plus the id counter, which never
/// rewinds within a run.
struct TrackSet {
  std::vector<Track> tracks;
  std::size_t next_id = 0;
};

/// Track-to-estimate association for one step.
///
/// Every target picks the live track with the smallest squared Mahalanobis
/// distance (under the target's covariance) within the gate, ties to the
/// lower id. A track claimed by several targets is extended by the
/// closest of them (ties to the heavier target); each other claimant starts
/// a new track. Targets outside every gate start new tentative tracks. New
/// ids are handed out in descending target weight order. Tracks that are
/// not extended coast, and retire after cfg.max_coast consecutive misses.
TrackSet associate(TrackSet tracks, std::span<const TargetEstimate> targets,
                   const TrackConfig& cfg, long step);

/// Confirmed subset, ordered by id.
std::vector<Track> confirmed_tracks(std::span<const Track> tracks);

}  // namespace gmphd_sat

#endif  // GMPHD_SAT_TRACK_HPP
