#ifndef GMPHD_SAT_CONFIG_HPP
#define GMPHD_SAT_CONFIG_HPP

// INI scenario files. Keys outside any section are scenario-wide; the rest
// live in [world], [motion], [sensor], [filter], [track], [planner] and [gp].
// Every key is optional and defaults to the ScenarioConfig default.

#include "gmphd_sat/sim.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace gmphd_sat {

/// Carries the offending key path (e.g. "filter.merge_threshold") when
/// there is one.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}

  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::filesystem::path& path);

/// Every key, with doubles printed to 17 significant digits so that
/// parse_config(dump_config(c)) reproduces c exactly.
std::string dump_config(const ScenarioConfig& cfg);

/// Dotted paths of all accepted keys, in dump order.
std::vector<std::string> config_keys();

const char* to_string(PlannerStrategy s);
const char* to_string(InitialEstimate e);
const char* to_string(ClutterModel m);
PlannerStrategy parse_strategy(const std::string& s);
InitialEstimate parse_estimate(const std::string& s);

}  // namespace gmphd_sat

#endif  // GMPHD_SAT_CONFIG_HPP
