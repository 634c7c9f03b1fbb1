#ifndef DOCO_CONFIG_HPP
#define DOCO_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "doco/common.hpp"
#include "doco/delay_model.hpp"
#include "doco/environments.hpp"

namespace doco {

struct AlgoSpec {
  std::string name;
  std::map<std::string, std::string> params;

  std::optional<std::string> get(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
};

/// Everything one experiment needs. Environment settings stay as text until
/// make_environment_spec() loads any referenced files.
struct ExperimentConfig {
  std::map<std::string, std::string> env_settings{{"family", "ridge"}, {"source", "synthetic"}};
  DelayRegime delay = DelayRegime::uniform(0, 5);
  std::vector<AlgoSpec> algos;
  Round horizon = 10000;
  int trials = 20;
  std::uint64_t master_seed = 1;
  std::filesystem::path out_dir = "results";
  int workers = 1;  // 0 = one per hardware thread
  /// Ridge term added to the unconstrained comparator's normal equations.
  double comparator_ridge = 0.0;
  std::filesystem::path base_dir = ".";  // relative file paths resolve here
};

/// Flat `key = value` text with [env], [delay], [algo.<name>] and [run]
/// sections. `#` and `;` start comments. Unknown sections or keys throw
/// ConfigError; syntax problems throw ParseError with the line number.
ExperimentConfig parse_config(std::string_view text,
                              const std::filesystem::path& base_dir = ".");
ExperimentConfig load_config(const std::filesystem::path& path);

/// `key=value,key=value` merged into the [env] section.
void apply_env_overrides(ExperimentConfig& config, std::string_view overrides);
/// Comma-separated algorithm names; existing per-algorithm parameters are kept.
void set_algorithms(ExperimentConfig& config, std::string_view names);

/// Checks T, trials, algorithm registration and the environment settings.
void validate(const ExperimentConfig& config);

/// Loads noise/dataset files and builds the environment description.
EnvironmentSpec make_environment_spec(const ExperimentConfig& config);

/// Canonical config text; parse_config(describe_config(c)) reproduces c.
std::string describe_config(const ExperimentConfig& config);

}  // namespace doco

#endif  // DOCO_CONFIG_HPP
