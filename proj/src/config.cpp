#include "doco/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "doco/harness.hpp"

namespace doco {

namespace {

const std::set<std::string> kEnvKeys = {
    "family", "source", "n",     "radius", "noise_sigma",        "period", "noise_file",
    "dataset", "dim",   "y_cap", "z_cap",  "olr_nominal_radius", "label"};

const std::set<std::string> kRunKeys = {"T",   "trials",  "master_seed",     "out",
                                        "workers", "algos", "comparator_ridge"};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto pos = s.find(sep, start);
    const auto piece = trim(s.substr(start, pos == std::string_view::npos ? s.size() - start
                                                                          : pos - start));
    if (!piece.empty()) out.push_back(piece);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double to_double(const std::string& key, const std::string& value) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size() || value.empty()) {
    throw ConfigError("config: field '" + key + "' expects a number, got '" + value + "'");
  }
  return v;
}

long long to_int(const std::string& key, const std::string& value) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size() || value.empty()) {
    throw ConfigError("config: field '" + key + "' expects an integer, got '" + value + "'");
  }
  return v;
}

std::uint64_t to_u64(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size() || value.empty()) {
    throw ConfigError("config: field '" + key + "' expects an unsigned integer, got '" + value +
                      "'");
  }
  return v;
}

AlgoSpec& algo_entry(ExperimentConfig& c, const std::string& name) {
  auto it = std::find_if(c.algos.begin(), c.algos.end(),
                         [&](const AlgoSpec& a) { return a.name == name; });
  if (it != c.algos.end()) return *it;
  c.algos.push_back(AlgoSpec{name, {}});
  return c.algos.back();
}

void set_run_key(ExperimentConfig& c, const std::string& key, const std::string& value) {
  if (key == "T") {
    c.horizon = to_int(key, value);
  } else if (key == "trials") {
    c.trials = static_cast<int>(to_int(key, value));
  } else if (key == "master_seed") {
    c.master_seed = to_u64(key, value);
  } else if (key == "out") {
    c.out_dir = value;
  } else if (key == "workers") {
    c.workers = static_cast<int>(to_int(key, value));
  } else if (key == "algos") {
    set_algorithms(c, value);
  } else if (key == "comparator_ridge") {
    c.comparator_ridge = to_double(key, value);
  }
}

std::filesystem::path resolve(const ExperimentConfig& c, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : c.base_dir / path;
}

}  // namespace

std::optional<std::string> AlgoSpec::get(const std::string& key) const {
  const auto it = params.find(key);
  if (it == params.end()) return std::nullopt;
  return it->second;
}

double AlgoSpec::get_double(const std::string& key, double fallback) const {
  const auto v = get(key);
  return v ? to_double(name + "." + key, *v) : fallback;
}

bool AlgoSpec::get_bool(const std::string& key, bool fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw ConfigError("config: field '" + name + "." + key + "' expects true/false");
}

ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  ExperimentConfig c;
  c.base_dir = base_dir;
  bool saw_algos_key = false;
  std::vector<std::string> algo_sections;
  std::vector<std::string> listed;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto cut = line.find_first_of("#;");
    if (cut != std::string::npos) line.erase(cut);
    const std::string s = trim(line);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ParseError("config: unterminated section header", lineno);
      section = trim(std::string_view(s).substr(1, s.size() - 2));
      if (section.rfind("algo.", 0) == 0) {
        const std::string name = section.substr(5);
        if (name.empty()) throw ParseError("config: empty algorithm section name", lineno);
        algo_sections.push_back(name);
      } else if (section != "env" && section != "delay" && section != "run") {
        throw ConfigError("config: unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ParseError("config: expected key = value", lineno);
    const std::string key = trim(std::string_view(s).substr(0, eq));
    const std::string value = trim(std::string_view(s).substr(eq + 1));
    if (key.empty()) throw ParseError("config: empty key", lineno);
    if (section.empty()) throw ParseError("config: key outside any section", lineno);
    if (section == "env") {
      if (!kEnvKeys.contains(key)) throw ConfigError("config: unknown [env] key '" + key + "'");
      c.env_settings[key] = value;
    } else if (section == "delay") {
      if (key != "regime") throw ConfigError("config: unknown [delay] key '" + key + "'");
      c.delay = parse_delay_regime(value);
    } else if (section == "run") {
      if (!kRunKeys.contains(key)) throw ConfigError("config: unknown [run] key '" + key + "'");
      if (key == "algos") {
        saw_algos_key = true;
        listed = split(value, ',');
      }
      set_run_key(c, key, value);
    } else {
      algo_entry(c, section.substr(5)).params[key] = value;
    }
  }
  // Without an explicit list the algorithms are the [algo.*] sections in
  // file order; with one, sections for unlisted algorithms are ignored.
  std::vector<AlgoSpec> ordered;
  for (const auto& name : saw_algos_key ? listed : algo_sections) {
    ordered.push_back(algo_entry(c, name));
  }
  c.algos = std::move(ordered);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.has_parent_path() ? path.parent_path() : ".");
}

void apply_env_overrides(ExperimentConfig& config, std::string_view overrides) {
  for (const auto& item : split(overrides, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: env override '" + item + "' is not key=value");
    }
    const std::string key = trim(std::string_view(item).substr(0, eq));
    if (!kEnvKeys.contains(key)) throw ConfigError("config: unknown [env] key '" + key + "'");
    config.env_settings[key] = trim(std::string_view(item).substr(eq + 1));
  }
}

void set_algorithms(ExperimentConfig& config, std::string_view names) {
  std::vector<AlgoSpec> next;
  for (const auto& name : split(names, ',')) {
    if (std::any_of(next.begin(), next.end(), [&](const AlgoSpec& a) { return a.name == name; })) {
      throw ConfigError("config: algorithm '" + name + "' listed twice");
    }
    next.push_back(algo_entry(config, name));
  }
  config.algos = std::move(next);
}

void validate(const ExperimentConfig& config) {
  if (config.horizon < 1) throw ConfigError("config: field 'T' must be >= 1");
  if (config.trials < 1) throw ConfigError("config: field 'trials' must be >= 1");
  if (config.workers < 0) throw ConfigError("config: field 'workers' must be >= 0");
  if (!(config.comparator_ridge >= 0.0)) {
    throw ConfigError("config: field 'comparator_ridge' must be >= 0");
  }
  if (config.algos.empty()) throw ConfigError("config: no algorithms selected");
  for (const auto& a : config.algos) {
    if (!is_registered_algorithm(a.name)) {
      throw ConfigError("config: algorithm '" + a.name + "' is not registered");
    }
  }
  config.delay.validate();
  make_environment_spec(config);
}

EnvironmentSpec make_environment_spec(const ExperimentConfig& config) {
  const auto& s = config.env_settings;
  const auto get = [&](const std::string& key) -> std::optional<std::string> {
    const auto it = s.find(key);
    if (it == s.end()) return std::nullopt;
    return it->second;
  };
  EnvironmentSpec env;
  env.family = parse_loss_family(get("family").value_or("ridge"));
  if (const auto v = get("radius")) env.radius = to_double("radius", *v);
  if (const auto v = get("y_cap")) env.y_cap = to_double("y_cap", *v);
  if (const auto v = get("z_cap")) env.z_cap = to_double("z_cap", *v);
  if (const auto v = get("olr_nominal_radius")) {
    env.olr_nominal_radius = to_double("olr_nominal_radius", *v);
  }
  if (const auto v = get("label")) env.label = *v;

  const std::string source = get("source").value_or("synthetic");
  if (source == "synthetic") {
    SyntheticSpec spec;
    if (const auto v = get("n")) spec.dim = to_int("n", *v);
    if (const auto v = get("noise_sigma")) spec.noise_sigma = to_double("noise_sigma", *v);
    env.source = spec;
  } else if (source == "nonstationary") {
    NonStationarySpec spec;
    if (const auto v = get("n")) spec.dim = to_int("n", *v);
    if (const auto v = get("period")) spec.period = to_int("period", *v);
    const auto file = get("noise_file");
    if (!file) throw ConfigError("config: field 'noise_file' is required for nonstationary");
    spec.noise = read_noise_stream(resolve(config, *file));
    spec.noise_source = *file;
    env.source = spec;
  } else if (source == "dataset") {
    const auto file = get("dataset");
    if (!file) throw ConfigError("config: field 'dataset' is required for source = dataset");
    Eigen::Index dim = 0;
    if (const auto v = get("dim")) dim = to_int("dim", *v);
    env.source = std::make_shared<const Dataset>(parse_libsvm(resolve(config, *file), dim));
  } else {
    throw ConfigError("config: field 'source' must be synthetic, nonstationary or dataset");
  }
  // Constructing a throwaway environment runs the field checks.
  Environment probe(env, 0);
  (void)probe;
  return env;
}

std::string describe_config(const ExperimentConfig& config) {
  std::ostringstream out;
  out << "[env]\n";
  for (const auto& [k, v] : config.env_settings) out << k << " = " << v << '\n';
  out << "\n[delay]\nregime = " << config.delay.describe() << "\n\n[run]\n";
  out << "T = " << config.horizon << '\n';
  out << "trials = " << config.trials << '\n';
  out << "master_seed = " << config.master_seed << '\n';
  out << "out = " << config.out_dir.string() << '\n';
  out << "workers = " << config.workers << '\n';
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", config.comparator_ridge);
  out << "comparator_ridge = " << buf << '\n';
  out << "algos = ";
  for (std::size_t i = 0; i < config.algos.size(); ++i) {
    out << (i ? "," : "") << config.algos[i].name;
  }
  out << '\n';
  for (const auto& a : config.algos) {
    if (a.params.empty()) continue;
    out << "\n[algo." << a.name << "]\n";
    for (const auto& [k, v] : a.params) out << k << " = " << v << '\n';
  }
  return out.str();
}

}  // namespace doco
