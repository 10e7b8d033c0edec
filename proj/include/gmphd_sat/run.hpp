#ifndef GMPHD_SAT_RUN_HPP
#define GMPHD_SAT_RUN_HPP

// Seed batches and their on-disk artifacts.
//
// A run directory holds config.ini, manifest.json, summary.json and one
// seed_<n>/ directory per seed with metrics.csv, tracks.csv and
// trajectory.csv.

#include "gmphd_sat/sim.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gmphd_sat {

std::string_view version();

enum class Metric {
  n_components,
  n_confirmed,
  sum_w_components,
  sum_w_tracks,
  mahal_closest,
  mahal_second,
  worst_track_trace,
};

inline constexpr Metric kAllMetrics[] = {
    Metric::n_components, Metric::n_confirmed,   Metric::sum_w_components,
    Metric::sum_w_tracks, Metric::mahal_closest, Metric::mahal_second,
    Metric::worst_track_trace,
};

const char* to_string(Metric m);
std::optional<double> metric_value(const MetricsRecord& r, Metric m);

struct Stat {
  double mean = 0.0;
  /// Sample standard deviation; 0 for fewer than two values.
  double std = 0.0;
  std::size_t count = 0;
};

Stat describe(std::span<const double> values);

/// Mean and spread of one metric over the records with from <= step <= to,
/// skipping steps where the metric is absent.
Stat step_stat(std::span<const MetricsRecord> metrics, Metric m, long from, long to);

/// Step windows used by summaries: the whole run, its last third, and its
/// second half (the planner comparison window).
struct StepWindow {
  std::string name;
  long from = 1;
  long to = 1;
};
std::vector<StepWindow> summary_windows(long steps);

struct RunManifest {
  std::string name = "default";
  ScenarioConfig config;
  std::vector<std::uint64_t> seeds;
  std::filesystem::path out_dir;
  std::string version{gmphd_sat::version()};
  /// Log tentative tracks in tracks.csv as well as confirmed ones.
  bool log_tentative_tracks = false;
  /// Worker threads; 0 picks the hardware concurrency.
  unsigned jobs = 0;

  /// Throws std::invalid_argument for an empty seed list or an output
  /// directory that cannot be created or written.
  void validate() const;
};

nlohmann::json to_json(const RunManifest& m);

struct SeedReport {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::vector<MetricsRecord> metrics;
};

/// Runs cfg once per seed on `jobs` threads. `sink`, when set, is called on
/// the worker thread with each finished result; an exception from it marks
/// that seed failed. Reports come back in seed-list order.
std::vector<SeedReport> run_seeds(
    const ScenarioConfig& cfg, std::span<const std::uint64_t> seeds, unsigned jobs = 0,
    const std::function<void(const ScenarioConfig&, const ScenarioResult&)>& sink = {});

void write_metrics_csv(std::ostream& out, std::span<const MetricsRecord> metrics);
void write_tracks_csv(std::ostream& out, std::span<const StepEvent> events, bool include_tentative);
/// One row per robot position, measurement and true target per step;
/// `kind` is robot, measurement or truth.
void write_trajectory_csv(std::ostream& out, std::span<const StepEvent> events);

/// Per-seed run averages, their mean/STD across seeds, and pooled per-step
/// statistics for each window, plus a `table` block (see make_table).
nlohmann::json summarize(const RunManifest& m, std::span<const SeedReport> reports);

struct RunOutcome {
  std::vector<SeedReport> reports;
  nlohmann::json summary;
  bool all_ok() const;
};

/// Executes the manifest and writes every artifact. Seeds that fail are
/// reported in the summary; the others still run.
RunOutcome execute(const RunManifest& m);

/// Combines the summary.json of several run directories into two tables
/// with one column per run: `cardinality` (confirmed tracks and both weight
/// sums) and `distance` (closest and second-closest Mahalanobis). Cells are
/// full-run mean and STD pooled over every step of every seed.
nlohmann::json make_table(std::span<const std::filesystem::path> run_dirs);

/// Default output root: $GMPHD_SAT_OUT, else ./runs.
std::filesystem::path default_output_root();

}  // namespace gmphd_sat

#endif  // GMPHD_SAT_RUN_HPP
