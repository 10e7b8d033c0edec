#include "gmphd_sat/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace gmphd_sat {

namespace pt = boost::property_tree;

const char* to_string(PlannerStrategy s) {
  switch (s) {
    case PlannerStrategy::lawnmower: return "lawnmower";
    case PlannerStrategy::nearest_gaussian: return "nearest_gaussian";
    case PlannerStrategy::largest_gaussian: return "largest_gaussian";
  }
  return "?";
}

const char* to_string(InitialEstimate e) {
  switch (e) {
    case InitialEstimate::under: return "under";
    case InitialEstimate::exact: return "exact";
    case InitialEstimate::over: return "over";
  }
  return "?";
}

const char* to_string(ClutterModel m) {
  return m == ClutterModel::bernoulli ? "bernoulli" : "poisson";
}

PlannerStrategy parse_strategy(const std::string& s) {
  if (s == "lawnmower" || s == "lawn_mower") return PlannerStrategy::lawnmower;
  if (s == "nearest_gaussian" || s == "nearest-gaussian") return PlannerStrategy::nearest_gaussian;
  if (s == "largest_gaussian" || s == "largest-gaussian") return PlannerStrategy::largest_gaussian;
  throw ConfigError("planner.strategy",
                    "expected lawnmower, nearest_gaussian or largest_gaussian, got '" + s + "'");
}

InitialEstimate parse_estimate(const std::string& s) {
  if (s == "under") return InitialEstimate::under;
  if (s == "exact") return InitialEstimate::exact;
  if (s == "over") return InitialEstimate::over;
  throw ConfigError("initial_estimate", "expected under, exact or over, got '" + s + "'");
}

namespace {

// Shortest text that parses back to the same double.
std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double to_double(const std::string& key, const std::string& s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw ConfigError(key, "expected a finite number, got '" + s + "'");
  }
  return v;
}

long to_long(const std::string& key, const std::string& s) {
  long v = 0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) throw ConfigError(key, "expected an integer, got '" + s + "'");
  return v;
}

bool to_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError(key, "expected true or false, got '" + s + "'");
}

struct Field {
  std::string key;
  std::function<std::string(const ScenarioConfig&)> get;
  std::function<void(ScenarioConfig&, const std::string&)> set;
  std::function<bool(const ScenarioConfig&)> present = [](const ScenarioConfig&) { return true; };
};

// Range predicates. Each returns an error description or empty.
using Check = std::function<std::string(double)>;

Check any() {
  return [](double) { return std::string(); };
}
Check at_least(double lo) {
  return [lo](double v) { return v >= lo ? std::string() : "must be >= " + fmt(lo) + ", got " + fmt(v); };
}
Check above(double lo) {
  return [lo](double v) { return v > lo ? std::string() : "must be > " + fmt(lo) + ", got " + fmt(v); };
}
Check unit() {
  return [](double v) {
    return v >= 0.0 && v <= 1.0 ? std::string() : "must lie in [0, 1], got " + fmt(v);
  };
}

template <typename Ref>
Field real(std::string key, Ref ref, Check check) {
  Field f;
  f.key = key;
  f.get = [ref](const ScenarioConfig& c) { return fmt(ref(const_cast<ScenarioConfig&>(c))); };
  f.set = [key, ref, check](ScenarioConfig& c, const std::string& s) {
    const double v = to_double(key, s);
    if (auto err = check(v); !err.empty()) throw ConfigError(key, err);
    ref(c) = v;
  };
  return f;
}

template <typename T, typename Ref>
Field integer(std::string key, Ref ref, long lo) {
  Field f;
  f.key = key;
  f.get = [ref](const ScenarioConfig& c) {
    return std::to_string(ref(const_cast<ScenarioConfig&>(c)));
  };
  f.set = [key, ref, lo](ScenarioConfig& c, const std::string& s) {
    const long v = to_long(key, s);
    if (v < lo) throw ConfigError(key, "must be >= " + std::to_string(lo) + ", got " + s);
    ref(c) = static_cast<T>(v);
  };
  return f;
}

template <typename Ref>
Field boolean(std::string key, Ref ref) {
  Field f;
  f.key = key;
  f.get = [ref](const ScenarioConfig& c) {
    return std::string(ref(const_cast<ScenarioConfig&>(c)) ? "true" : "false");
  };
  f.set = [key, ref](ScenarioConfig& c, const std::string& s) { ref(c) = to_bool(key, s); };
  return f;
}

Field gp_param(std::string key, int axis, double GpHyperparams::*member) {
  Field f;
  f.key = key;
  f.present = [](const ScenarioConfig& c) { return !c.gp.params.empty(); };
  f.get = [axis, member](const ScenarioConfig& c) { return fmt(c.gp.params[axis].*member); };
  f.set = [key, axis, member](ScenarioConfig& c, const std::string& s) {
    const double v = to_double(key, s);
    if (!(v > 0.0)) throw ConfigError(key, "must be > 0, got " + s);
    if (c.gp.params.empty()) c.gp.params.resize(2);
    c.gp.params[axis].*member = v;
  };
  return f;
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> t;
    t.push_back({"name", [](const ScenarioConfig& c) { return c.name; },
                 [](ScenarioConfig& c, const std::string& s) { c.name = s; }});
    t.push_back(integer<std::uint64_t>("seed", [](ScenarioConfig& c) -> auto& { return c.seed; }, 0));
    t.push_back(integer<long>("steps", [](ScenarioConfig& c) -> auto& { return c.steps; }, 1));
    t.push_back(integer<int>("num_targets", [](ScenarioConfig& c) -> auto& { return c.num_targets; }, 0));
    t.push_back(real("clutter_rate", [](ScenarioConfig& c) -> auto& { return c.clutter_rate; }, at_least(0.0)));
    t.push_back({"clutter_model", [](const ScenarioConfig& c) { return std::string(to_string(c.clutter_model)); },
                 [](ScenarioConfig& c, const std::string& s) {
                   if (s == "bernoulli") c.clutter_model = ClutterModel::bernoulli;
                   else if (s == "poisson") c.clutter_model = ClutterModel::poisson;
                   else throw ConfigError("clutter_model", "expected bernoulli or poisson, got '" + s + "'");
                 }});
    t.push_back({"initial_estimate",
                 [](const ScenarioConfig& c) { return std::string(to_string(c.initial_estimate)); },
                 [](ScenarioConfig& c, const std::string& s) { c.initial_estimate = parse_estimate(s); }});
    t.push_back(real("initial_offset", [](ScenarioConfig& c) -> auto& { return c.initial_offset; }, at_least(0.0)));
    t.push_back(real("initial_variance", [](ScenarioConfig& c) -> auto& { return c.initial_variance; }, above(0.0)));
    t.push_back(real("robot_speed", [](ScenarioConfig& c) -> auto& { return c.robot_speed; }, above(0.0)));
    t.push_back(real("process_noise", [](ScenarioConfig& c) -> auto& { return c.process_noise; }, at_least(0.0)));
    t.push_back(real("survival_prob", [](ScenarioConfig& c) -> auto& { return c.survival_prob; }, unit()));
    t.push_back(boolean("extract_births", [](ScenarioConfig& c) -> auto& { return c.extract_births; }));
    t.push_back(boolean("record_events", [](ScenarioConfig& c) -> auto& { return c.record_events; }));

    t.push_back(real("world.x_min", [](ScenarioConfig& c) -> auto& { return c.world.x_min; }, any()));
    t.push_back(real("world.y_min", [](ScenarioConfig& c) -> auto& { return c.world.y_min; }, any()));
    t.push_back(real("world.x_max", [](ScenarioConfig& c) -> auto& { return c.world.x_max; }, any()));
    t.push_back(real("world.y_max", [](ScenarioConfig& c) -> auto& { return c.world.y_max; }, any()));

    t.push_back(boolean("motion.stationary", [](ScenarioConfig& c) -> auto& { return c.motion.stationary; }));
    t.push_back(integer<int>("motion.direction_period",
                             [](ScenarioConfig& c) -> auto& { return c.motion.direction_period; }, 1));
    t.push_back(real("motion.target_speed", [](ScenarioConfig& c) -> auto& { return c.target_speed; }, at_least(0.0)));

    t.push_back(real("sensor.fov_radius", [](ScenarioConfig& c) -> auto& { return c.sensor.fov.radius; }, above(0.0)));
    t.push_back(real("sensor.p_detect_given_in",
                     [](ScenarioConfig& c) -> auto& { return c.sensor.p_detect_given_in; }, unit()));
    t.push_back(real("sensor.meas_noise_xx", [](ScenarioConfig& c) -> auto& { return c.sensor.meas_noise(0, 0); }, above(0.0)));
    t.push_back({"sensor.meas_noise_xy", [](const ScenarioConfig& c) { return fmt(c.sensor.meas_noise(0, 1)); },
                 [](ScenarioConfig& c, const std::string& s) {
                   const double v = to_double("sensor.meas_noise_xy", s);
                   c.sensor.meas_noise(0, 1) = v;
                   c.sensor.meas_noise(1, 0) = v;
                 }});
    t.push_back(real("sensor.meas_noise_yy", [](ScenarioConfig& c) -> auto& { return c.sensor.meas_noise(1, 1); }, above(0.0)));

    t.push_back(real("filter.pd_band_low", [](ScenarioConfig& c) -> auto& { return c.filter.pd_band_low; }, unit()));
    t.push_back(real("filter.pd_band_high", [](ScenarioConfig& c) -> auto& { return c.filter.pd_band_high; }, unit()));
    t.push_back(real("filter.prune_weight", [](ScenarioConfig& c) -> auto& { return c.filter.prune_weight; }, at_least(0.0)));
    t.push_back(real("filter.merge_threshold", [](ScenarioConfig& c) -> auto& { return c.filter.merge_threshold; }, at_least(0.0)));
    t.push_back(integer<std::size_t>("filter.max_components",
                                     [](ScenarioConfig& c) -> auto& { return c.filter.max_components; }, 1));
    t.push_back(real("filter.extract_weight", [](ScenarioConfig& c) -> auto& { return c.filter.extract_weight; }, at_least(0.0)));
    t.push_back(real("filter.birth_weight", [](ScenarioConfig& c) -> auto& { return c.filter.birth_weight; }, at_least(0.0)));
    t.push_back(real("filter.birth_velocity_variance",
                     [](ScenarioConfig& c) -> auto& { return c.filter.birth_velocity_variance; }, above(0.0)));
    t.push_back(boolean("filter.push_enabled", [](ScenarioConfig& c) -> auto& { return c.filter.push_enabled; }));
    t.push_back(boolean("filter.push_when_gated", [](ScenarioConfig& c) -> auto& { return c.filter.push_when_gated; }));
    t.push_back({"filter.merge_rule",
                 [](const ScenarioConfig& c) {
                   return std::string(c.filter.merge_rule == MergeRule::moment ? "moment" : "plain_average");
                 },
                 [](ScenarioConfig& c, const std::string& s) {
                   if (s == "moment") c.filter.merge_rule = MergeRule::moment;
                   else if (s == "plain_average") c.filter.merge_rule = MergeRule::plain_average;
                   else throw ConfigError("filter.merge_rule", "expected moment or plain_average, got '" + s + "'");
                 }});

    t.push_back(integer<std::size_t>("track.l_threshold", [](ScenarioConfig& c) -> auto& { return c.track.l_threshold; }, 1));
    t.push_back(real("track.gate", [](ScenarioConfig& c) -> auto& { return c.track.gate; }, above(0.0)));
    t.push_back(integer<int>("track.max_coast", [](ScenarioConfig& c) -> auto& { return c.track.max_coast; }, 1));

    t.push_back({"planner.strategy", [](const ScenarioConfig& c) { return std::string(to_string(c.planner.strategy)); },
                 [](ScenarioConfig& c, const std::string& s) { c.planner.strategy = parse_strategy(s); }});
    t.push_back(real("planner.lane_spacing", [](ScenarioConfig& c) -> auto& { return c.planner.lane_spacing; }, above(0.0)));
    t.push_back({"planner.covariance_measure",
                 [](const ScenarioConfig& c) {
                   return std::string(c.planner.covariance_measure == CovarianceMeasure::trace ? "trace" : "determinant");
                 },
                 [](ScenarioConfig& c, const std::string& s) {
                   if (s == "trace") c.planner.covariance_measure = CovarianceMeasure::trace;
                   else if (s == "determinant") c.planner.covariance_measure = CovarianceMeasure::determinant;
                   else throw ConfigError("planner.covariance_measure", "expected trace or determinant, got '" + s + "'");
                 }});

    t.push_back(boolean("gp.enabled", [](ScenarioConfig& c) -> auto& { return c.gp.enabled; }));
    t.push_back(integer<std::size_t>("gp.window", [](ScenarioConfig& c) -> auto& { return c.gp.window; }, 2));
    t.push_back(boolean("gp.refit_per_track", [](ScenarioConfig& c) -> auto& { return c.gp.refit_per_track; }));
    t.push_back({"gp.training_file", [](const ScenarioConfig& c) { return c.gp.training_file; },
                 [](ScenarioConfig& c, const std::string& s) { c.gp.training_file = s; }});
    t.push_back(real("gp.signal_min", [](ScenarioConfig& c) -> auto& { return c.gp.bounds.signal_min; }, above(0.0)));
    t.push_back(real("gp.signal_max", [](ScenarioConfig& c) -> auto& { return c.gp.bounds.signal_max; }, above(0.0)));
    t.push_back(real("gp.length_min", [](ScenarioConfig& c) -> auto& { return c.gp.bounds.length_min; }, above(0.0)));
    t.push_back(real("gp.length_max", [](ScenarioConfig& c) -> auto& { return c.gp.bounds.length_max; }, above(0.0)));
    t.push_back(real("gp.noise_min", [](ScenarioConfig& c) -> auto& { return c.gp.bounds.noise_min; }, above(0.0)));
    t.push_back(real("gp.noise_max", [](ScenarioConfig& c) -> auto& { return c.gp.bounds.noise_max; }, above(0.0)));
    t.push_back(integer<int>("gp.grid_points", [](ScenarioConfig& c) -> auto& { return c.gp.bounds.grid_points; }, 2));
    const char* axes[] = {"x", "y"};
    for (int a = 0; a < 2; ++a) {
      const std::string ax = axes[a];
      t.push_back(gp_param("gp.signal_variance_" + ax, a, &GpHyperparams::signal_variance));
      t.push_back(gp_param("gp.length_scale_" + ax, a, &GpHyperparams::length_scale));
      t.push_back(gp_param("gp.noise_variance_" + ax, a, &GpHyperparams::noise_variance));
    }
    return t;
  }();
  return table;
}

// Cross-field checks, reported against the key that has to change.
void check_consistency(const ScenarioConfig& c) {
  if (!(c.world.x_max > c.world.x_min)) throw ConfigError("world.x_max", "must exceed world.x_min");
  if (!(c.world.y_max > c.world.y_min)) throw ConfigError("world.y_max", "must exceed world.y_min");
  if (c.clutter_model == ClutterModel::bernoulli && c.clutter_rate > 1.0) {
    throw ConfigError("clutter_rate", "is a probability under the bernoulli clutter model, got " + fmt(c.clutter_rate));
  }
  if (c.filter.pd_band_low > c.filter.pd_band_high) {
    throw ConfigError("filter.pd_band_high", "must not be below filter.pd_band_low");
  }
  if (!(c.filter.prune_weight < c.filter.extract_weight)) {
    throw ConfigError("filter.prune_weight", "must be below filter.extract_weight");
  }
  if (c.planner.lane_spacing > 2.0 * c.sensor.fov.radius) {
    throw ConfigError("planner.lane_spacing", "exceeds the FOV diameter 2 * sensor.fov_radius");
  }
  const Eigen::LLT<Eigen::Matrix2d> llt(c.sensor.meas_noise);
  if (llt.info() != Eigen::Success) {
    throw ConfigError("sensor.meas_noise_xy", "measurement noise is not positive definite");
  }
  const auto& b = c.gp.bounds;
  if (!(b.signal_min <= b.signal_max)) throw ConfigError("gp.signal_max", "must not be below gp.signal_min");
  if (!(b.length_min <= b.length_max)) throw ConfigError("gp.length_max", "must not be below gp.length_min");
  if (!(b.noise_min <= b.noise_max)) throw ConfigError("gp.noise_max", "must not be below gp.noise_min");
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("", e.what());
  }
}

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.push_back(f.key);
  return keys;
}

ScenarioConfig parse_config(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("", "line " + std::to_string(e.line()) + ": " + e.message());
  }

  std::set<std::string> seen;
  for (const auto& [name, node] : tree) {
    if (node.empty()) {
      seen.insert(name);
      continue;
    }
    for (const auto& [key, leaf] : node) {
      if (!leaf.empty()) throw ConfigError(name + "." + key, "nested sections are not supported");
      seen.insert(name + "." + key);
    }
  }
  std::set<std::string> known;
  for (const auto& f : fields()) known.insert(f.key);
  for (const auto& key : seen) {
    if (!known.contains(key)) throw ConfigError(key, "unknown key");
  }

  ScenarioConfig cfg;
  const auto is_gp_axis_key = [](const std::string& key) {
    return key.starts_with("gp.") && (key.ends_with("_x") || key.ends_with("_y"));
  };
  bool any_gp_param = false;
  for (const auto& f : fields()) {
    const auto value = tree.get_optional<std::string>(pt::ptree::path_type(f.key, '.'));
    if (!value) continue;
    f.set(cfg, *value);
    if (is_gp_axis_key(f.key)) any_gp_param = true;
  }
  if (any_gp_param) {
    for (const auto& f : fields()) {
      if (!is_gp_axis_key(f.key)) continue;
      if (!tree.get_optional<std::string>(pt::ptree::path_type(f.key, '.'))) {
        throw ConfigError(f.key, "GP hyperparameters must be given for both axes or not at all");
      }
    }
  }
  cfg.planner.world = cfg.world;
  check_consistency(cfg);
  return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string dump_config(const ScenarioConfig& cfg) {
  std::ostringstream out;
  std::string section;
  for (const auto& f : fields()) {
    if (!f.present(cfg)) continue;
    const auto dot = f.key.find('.');
    const std::string sec = dot == std::string::npos ? "" : f.key.substr(0, dot);
    const std::string key = dot == std::string::npos ? f.key : f.key.substr(dot + 1);
    if (sec != section) {
      out << "\n[" << sec << "]\n";
      section = sec;
    }
    out << key << " = " << f.get(cfg) << "\n";
  }
  return out.str();
}

}  // namespace gmphd_sat
