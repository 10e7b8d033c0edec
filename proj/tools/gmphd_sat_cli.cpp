// gmphd-sat: run search-and-track scenarios and aggregate their logs.
//
//   gmphd-sat run     [options]            one seed
//   gmphd-sat batch   [options]            --seeds N consecutive seeds from --seed
//   gmphd-sat compare --pair push|planner  paired batches, one per arm
//   gmphd-sat table   DIR...               cardinality/distance tables from run dirs
//   gmphd-sat config  [options]            print the resolved config

#include "gmphd_sat/config.hpp"
#include "gmphd_sat/run.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>

using namespace gmphd_sat;
namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config;
  std::uint64_t seed = 1;
  std::size_t n_seeds = 5;
  std::string out;
  std::string name;
  std::string strategy;
  std::optional<double> clutter;
  std::string estimate;
  bool no_push = false;
  bool moving = false;
  std::optional<long> steps;
  unsigned jobs = 0;
  bool log_tentative = false;
};

void add_scenario_options(CLI::App* app, Options& o) {
  app->add_option("--config", o.config, "INI scenario file")->check(CLI::ExistingFile);
  app->add_option("--seed", o.seed, "Seed (first seed for batches)");
  app->add_option("--out", o.out, "Output directory (default $GMPHD_SAT_OUT/<name> or runs/<name>)");
  app->add_option("--name", o.name, "Scenario name, overrides the config");
  app->add_option("--strategy", o.strategy, "lawnmower, nearest_gaussian or largest_gaussian");
  app->add_option("--clutter", o.clutter, "Per-scan clutter rate")->check(CLI::NonNegativeNumber);
  app->add_option("--estimate", o.estimate, "Initial belief")
      ->check(CLI::IsMember({"under", "exact", "over"}));
  app->add_flag("--no-push", o.no_push, "Disable the missed-detection push");
  app->add_flag("--moving-targets", o.moving, "Moving targets with GP track prediction");
  app->add_option("--steps", o.steps, "Simulation steps")->check(CLI::PositiveNumber);
  app->add_option("--jobs", o.jobs, "Worker threads (0 = all cores)");
  app->add_flag("--log-tentative", o.log_tentative, "Also log tentative tracks in tracks.csv");
}

ScenarioConfig resolve(const Options& o) {
  ScenarioConfig cfg = o.config.empty() ? parse_config("") : load_config(o.config);
  if (!o.name.empty()) cfg.name = o.name;
  if (!o.strategy.empty()) cfg.planner.strategy = parse_strategy(o.strategy);
  if (o.clutter) cfg.clutter_rate = *o.clutter;
  if (!o.estimate.empty()) cfg.initial_estimate = parse_estimate(o.estimate);
  if (o.no_push) cfg.filter.push_enabled = false;
  if (o.moving) {
    cfg.motion.stationary = false;
    cfg.gp.enabled = true;
  }
  if (o.steps) cfg.steps = *o.steps;
  cfg.seed = o.seed;
  // Re-parse so command-line overrides get the same range checks as the file.
  return parse_config(dump_config(cfg));
}

std::vector<std::uint64_t> seed_list(std::uint64_t first, std::size_t n) {
  std::vector<std::uint64_t> seeds(n);
  std::iota(seeds.begin(), seeds.end(), first);
  return seeds;
}

fs::path output_dir(const Options& o, const std::string& name) {
  return o.out.empty() ? default_output_root() / name : fs::path(o.out);
}

void print_brief(const RunOutcome& r) {
  const auto& m = r.summary["windows"]["full"]["metrics"];
  auto show = [&](const char* label, const char* key) {
    const auto& st = m[key]["across_seeds"];
    if (st["mean"].is_null()) {
      std::printf("  %-22s n/a\n", label);
    } else {
      std::printf("  %-22s %.4f (sd %.4f over %zu seeds)\n", label, st["mean"].get<double>(),
                  st["std"].get<double>(), st["n"].get<std::size_t>());
    }
  };
  show("confirmed tracks", "n_confirmed");
  show("sum w components", "sum_w_components");
  show("sum w tracks", "sum_w_tracks");
  show("mahal closest", "mahal_closest");
  show("mahal second", "mahal_second");
  for (const auto& f : r.summary["failed"]) {
    std::fprintf(stderr, "seed %llu failed: %s\n",
                 static_cast<unsigned long long>(f["seed"].get<std::uint64_t>()),
                 f["error"].get<std::string>().c_str());
  }
}

int run_manifest(const RunManifest& m) {
  const RunOutcome r = execute(m);
  std::printf("%s -> %s\n", m.name.c_str(), m.out_dir.string().c_str());
  print_brief(r);
  return r.all_ok() ? 0 : 1;
}

RunManifest manifest(const Options& o, const ScenarioConfig& cfg, std::vector<std::uint64_t> seeds,
                     const fs::path& dir) {
  RunManifest m;
  m.name = cfg.name;
  m.config = cfg;
  m.seeds = std::move(seeds);
  m.out_dir = dir;
  m.jobs = o.jobs;
  m.log_tentative_tracks = o.log_tentative;
  return m;
}

int compare(const Options& o, const std::string& pair) {
  const ScenarioConfig base = resolve(o);
  ScenarioConfig a = base;
  ScenarioConfig b = base;
  if (pair == "push") {
    a.filter.push_enabled = true;
    b.filter.push_enabled = false;
    a.name = base.name + "_push";
    b.name = base.name + "_no_push";
  } else {
    a.planner.strategy = PlannerStrategy::lawnmower;
    b.planner.strategy = PlannerStrategy::largest_gaussian;
    a.name = base.name + "_lawnmower";
    b.name = base.name + "_largest_gaussian";
  }
  const fs::path root = output_dir(o, base.name + "_compare_" + pair);
  const auto seeds = seed_list(o.seed, o.n_seeds);
  const RunOutcome ra = execute(manifest(o, a, seeds, root / a.name));
  const RunOutcome rb = execute(manifest(o, b, seeds, root / b.name));

  nlohmann::json out;
  out["pair"] = pair;
  out["seeds"] = seeds;
  for (const auto& [label, r] : {std::pair{a.name, &ra}, std::pair{b.name, &rb}}) {
    const auto& w = r->summary["windows"];
    out["arms"][label] = {
        {"n_confirmed", w["full"]["metrics"]["n_confirmed"]["across_seeds"]},
        {"mahal_closest", w["full"]["metrics"]["mahal_closest"]["across_seeds"]},
        {"worst_track_trace_second_half", w["second_half"]["metrics"]["worst_track_trace"]["across_seeds"]},
    };
  }
  std::ofstream(root / "compare.json") << out.dump(2) << "\n";
  std::cout << out.dump(2) << "\n";
  return ra.all_ok() && rb.all_ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GM-PHD search and track with a mobile limited-FOV sensor"};
  app.set_version_flag("--version", std::string(version()));
  app.require_subcommand(1);

  Options o;
  auto* run = app.add_subcommand("run", "Run one seed");
  add_scenario_options(run, o);

  auto* batch = app.add_subcommand("batch", "Run a seed sweep");
  add_scenario_options(batch, o);
  batch->add_option("--seeds", o.n_seeds, "Number of seeds")->check(CLI::PositiveNumber);

  std::string pair = "push";
  auto* cmp = app.add_subcommand("compare", "Paired batches: push ablation or planner comparison");
  add_scenario_options(cmp, o);
  cmp->add_option("--seeds", o.n_seeds, "Number of seeds")->check(CLI::PositiveNumber);
  cmp->add_option("--pair", pair, "push or planner")->check(CLI::IsMember({"push", "planner"}));

  std::vector<std::string> dirs;
  std::string table_out;
  auto* table = app.add_subcommand("table", "Cardinality and distance tables from run directories");
  table->add_option("dirs", dirs, "Run directories")->required();
  table->add_option("--out", table_out, "Write the JSON here instead of stdout");

  bool list_keys = false;
  auto* config = app.add_subcommand("config", "Print the resolved config");
  add_scenario_options(config, o);
  config->add_flag("--keys", list_keys, "List accepted keys only");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*config) {
      if (list_keys) {
        for (const auto& k : config_keys()) std::cout << k << "\n";
      } else {
        std::cout << dump_config(resolve(o));
      }
      return 0;
    }
    if (*table) {
      std::vector<fs::path> paths(dirs.begin(), dirs.end());
      const std::string text = make_table(paths).dump(2) + "\n";
      if (table_out.empty()) {
        std::cout << text;
      } else {
        std::ofstream f(table_out);
        if (!f) throw std::runtime_error("cannot write '" + table_out + "'");
        f << text;
      }
      return 0;
    }
    if (*cmp) return compare(o, pair);

    const ScenarioConfig cfg = resolve(o);
    const auto seeds = *batch ? seed_list(o.seed, o.n_seeds) : seed_list(o.seed, 1);
    return run_manifest(manifest(o, cfg, seeds, output_dir(o, cfg.name)));
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
