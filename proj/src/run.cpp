#include "gmphd_sat/run.hpp"

#include "gmphd_sat/config.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <thread>

#ifndef GMPHD_SAT_VERSION
#define GMPHD_SAT_VERSION "unknown"
#endif

namespace gmphd_sat {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view version() { return GMPHD_SAT_VERSION; }

const char* to_string(Metric m) {
  switch (m) {
    case Metric::n_components: return "n_components";
    case Metric::n_confirmed: return "n_confirmed";
    case Metric::sum_w_components: return "sum_w_components";
    case Metric::sum_w_tracks: return "sum_w_tracks";
    case Metric::mahal_closest: return "mahal_closest";
    case Metric::mahal_second: return "mahal_second";
    case Metric::worst_track_trace: return "worst_track_trace";
  }
  return "?";
}

std::optional<double> metric_value(const MetricsRecord& r, Metric m) {
  switch (m) {
    case Metric::n_components: return static_cast<double>(r.n_components);
    case Metric::n_confirmed: return static_cast<double>(r.n_confirmed);
    case Metric::sum_w_components: return r.sum_w_components;
    case Metric::sum_w_tracks: return r.sum_w_tracks;
    case Metric::mahal_closest: return r.mahal_closest;
    case Metric::mahal_second: return r.mahal_second;
    case Metric::worst_track_trace: return r.worst_track_trace;
  }
  return std::nullopt;
}

Stat describe(std::span<const double> values) {
  Stat s;
  s.count = values.size();
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

namespace {

std::vector<double> window_values(std::span<const MetricsRecord> metrics, Metric m, long from,
                                  long to) {
  std::vector<double> values;
  for (const auto& r : metrics) {
    if (r.step < from || r.step > to) continue;
    if (auto v = metric_value(r, m)) values.push_back(*v);
  }
  return values;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

json stat_json(const Stat& s) {
  if (s.count == 0) return {{"mean", nullptr}, {"std", nullptr}, {"n", 0}};
  return {{"mean", s.mean}, {"std", s.std}, {"n", s.count}};
}

}  // namespace

Stat step_stat(std::span<const MetricsRecord> metrics, Metric m, long from, long to) {
  const auto values = window_values(metrics, m, from, to);
  return describe(values);
}

std::vector<StepWindow> summary_windows(long steps) {
  return {
      {"full", 1, steps},
      {"last_third", steps - steps / 3 + 1, steps},
      {"second_half", steps / 2 + 1, steps},
  };
}

void RunManifest::validate() const {
  if (seeds.empty()) throw std::invalid_argument("seed list is empty");
  if (out_dir.empty()) throw std::invalid_argument("output directory is empty");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) {
    throw std::invalid_argument("cannot create output directory '" + out_dir.string() + "'");
  }
  const fs::path probe = out_dir / ".write_probe";
  {
    std::ofstream f(probe);
    if (!f) throw std::invalid_argument("output directory '" + out_dir.string() + "' is not writable");
  }
  fs::remove(probe, ec);
  config.validate();
}

json to_json(const RunManifest& m) {
  return {
      {"name", m.name},
      {"version", m.version},
      {"seeds", m.seeds},
      {"out_dir", m.out_dir.string()},
      {"log_tentative_tracks", m.log_tentative_tracks},
      {"config", dump_config(m.config)},
  };
}

std::vector<SeedReport> run_seeds(
    const ScenarioConfig& cfg, std::span<const std::uint64_t> seeds, unsigned jobs,
    const std::function<void(const ScenarioConfig&, const ScenarioResult&)>& sink) {
  std::vector<SeedReport> reports(seeds.size());
  if (seeds.empty()) return reports;
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, seeds.size()));

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < seeds.size(); i = next++) {
      SeedReport& rep = reports[i];
      rep.seed = seeds[i];
      try {
        ScenarioConfig c = cfg;
        c.seed = seeds[i];
        ScenarioResult res = run_scenario(c);
        if (sink) sink(c, res);
        rep.metrics = std::move(res.metrics);
        rep.ok = true;
      } catch (const std::exception& e) {
        rep.error = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return reports;
}

void write_metrics_csv(std::ostream& out, std::span<const MetricsRecord> metrics) {
  out << "step,n_components,n_confirmed,sum_w_components,sum_w_tracks,mahal_closest,mahal_second\n";
  for (const auto& r : metrics) {
    out << r.step << ',' << r.n_components << ',' << r.n_confirmed << ',' << num(r.sum_w_components)
        << ',' << num(r.sum_w_tracks) << ',' << num(r.mahal_closest) << ',' << num(r.mahal_second)
        << '\n';
  }
}

void write_tracks_csv(std::ostream& out, std::span<const StepEvent> events, bool include_tentative) {
  out << "step,track_id,x,y,p_xx,p_xy,p_yy,status\n";
  for (const auto& ev : events) {
    for (const auto& t : ev.tracks) {
      if (!include_tentative && t.status != TrackStatus::confirmed) continue;
      out << ev.step << ',' << t.id << ',' << num(t.mean.x()) << ',' << num(t.mean.y()) << ','
          << num(t.covariance(0, 0)) << ',' << num(t.covariance(0, 1)) << ','
          << num(t.covariance(1, 1)) << ',' << to_string(t.status) << '\n';
    }
  }
}

void write_trajectory_csv(std::ostream& out, std::span<const StepEvent> events) {
  out << "step,kind,id,x,y\n";
  for (const auto& ev : events) {
    out << ev.step << ",robot,0," << num(ev.robot.x()) << ',' << num(ev.robot.y()) << '\n';
    for (std::size_t i = 0; i < ev.measurements.size(); ++i) {
      out << ev.step << ",measurement," << i << ',' << num(ev.measurements[i].x()) << ','
          << num(ev.measurements[i].y()) << '\n';
    }
    for (std::size_t i = 0; i < ev.truth.size(); ++i) {
      out << ev.step << ",truth," << i << ',' << num(ev.truth[i].x()) << ',' << num(ev.truth[i].y())
          << '\n';
    }
  }
}

json summarize(const RunManifest& m, std::span<const SeedReport> reports) {
  json s;
  s["name"] = m.name;
  s["version"] = m.version;
  s["steps"] = m.config.steps;
  s["seeds"] = m.seeds;
  json completed = json::array();
  json failed = json::array();
  for (const auto& r : reports) {
    if (r.ok) completed.push_back(r.seed);
    else failed.push_back({{"seed", r.seed}, {"error", r.error}});
  }
  s["completed"] = completed;
  s["failed"] = failed;

  json windows = json::object();
  for (const auto& w : summary_windows(m.config.steps)) {
    json metrics = json::object();
    for (Metric metric : kAllMetrics) {
      json per_seed = json::array();
      std::vector<double> averages;
      std::vector<double> pooled;
      for (const auto& r : reports) {
        if (!r.ok) continue;
        const auto values = window_values(r.metrics, metric, w.from, w.to);
        const Stat st = describe(values);
        if (st.count == 0) {
          per_seed.push_back(nullptr);
          continue;
        }
        per_seed.push_back(st.mean);
        averages.push_back(st.mean);
        pooled.insert(pooled.end(), values.begin(), values.end());
      }
      metrics[to_string(metric)] = {
          {"per_seed", per_seed},
          {"across_seeds", stat_json(describe(averages))},
          {"pooled", stat_json(describe(pooled))},
      };
    }
    windows[w.name] = {{"from", w.from}, {"to", w.to}, {"metrics", metrics}};
  }
  s["windows"] = windows;

  const json& full = windows["full"]["metrics"];
  auto cell = [&](Metric metric) { return full[to_string(metric)]["pooled"]; };
  s["table"] = {
      {"cardinality",
       {{"tracks", cell(Metric::n_confirmed)},
        {"sum_w_components", cell(Metric::sum_w_components)},
        {"sum_w_tracks", cell(Metric::sum_w_tracks)}}},
      {"distance",
       {{"closest", cell(Metric::mahal_closest)}, {"second_closest", cell(Metric::mahal_second)}}},
  };
  return s;
}

bool RunOutcome::all_ok() const {
  return std::all_of(reports.begin(), reports.end(), [](const SeedReport& r) { return r.ok; });
}

namespace {

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
  f << text;
  if (!f) throw std::runtime_error("write failed for '" + path.string() + "'");
}

template <typename Writer>
void write_csv(const fs::path& path, Writer&& w) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
  w(f);
  if (!f) throw std::runtime_error("write failed for '" + path.string() + "'");
}

}  // namespace

RunOutcome execute(const RunManifest& m) {
  m.validate();
  write_file(m.out_dir / "config.ini", dump_config(m.config));
  write_file(m.out_dir / "manifest.json", to_json(m).dump(2) + "\n");

  ScenarioConfig cfg = m.config;
  cfg.record_events = true;
  auto sink = [&](const ScenarioConfig& c, const ScenarioResult& res) {
    const fs::path dir = m.out_dir / ("seed_" + std::to_string(c.seed));
    fs::create_directories(dir);
    write_csv(dir / "metrics.csv", [&](std::ostream& o) { write_metrics_csv(o, res.metrics); });
    write_csv(dir / "tracks.csv",
              [&](std::ostream& o) { write_tracks_csv(o, res.events, m.log_tentative_tracks); });
    write_csv(dir / "trajectory.csv", [&](std::ostream& o) { write_trajectory_csv(o, res.events); });
  };

  RunOutcome out;
  out.reports = run_seeds(cfg, m.seeds, m.jobs, sink);
  out.summary = summarize(m, out.reports);
  write_file(m.out_dir / "summary.json", out.summary.dump(2) + "\n");
  return out;
}

json make_table(std::span<const fs::path> run_dirs) {
  json columns = json::array();
  json cardinality = {{"tracks", json::array()},
                      {"sum_w_components", json::array()},
                      {"sum_w_tracks", json::array()}};
  json distance = {{"closest", json::array()}, {"second_closest", json::array()}};
  for (const auto& dir : run_dirs) {
    std::ifstream f(dir / "summary.json");
    if (!f) throw std::runtime_error("no summary.json in '" + dir.string() + "'");
    json s;
    try {
      s = json::parse(f);
    } catch (const json::exception& e) {
      throw std::runtime_error("bad summary.json in '" + dir.string() + "': " + e.what());
    }
    if (!s.contains("table")) throw std::runtime_error("summary.json in '" + dir.string() + "' has no table");
    columns.push_back(s.value("name", dir.filename().string()));
    for (auto& [row, cells] : cardinality.items()) cells.push_back(s["table"]["cardinality"][row]);
    for (auto& [row, cells] : distance.items()) cells.push_back(s["table"]["distance"][row]);
  }
  return {{"columns", columns}, {"cardinality", cardinality}, {"distance", distance}};
}

fs::path default_output_root() {
  if (const char* env = std::getenv("GMPHD_SAT_OUT"); env != nullptr && *env != '\0') return env;
  return "runs";
}

}  // namespace gmphd_sat
