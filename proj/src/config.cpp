#include "afem/config.hpp"

#include "afem/errors.hpp"
#include "afem/problem.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>

namespace afem {

namespace {

constexpr std::string_view kChecks[] = {"reduction", "orthogonality", "rlinear",   "rate",
                                        "marking",   "reliability",   "closure", "conformity", "ellipticity"};

constexpr std::string_view kKeys[] = {"problem",       "theta",    "marking",          "max_elements",
                                      "eta_tol",       "checks",   "out",              "seed",
                                      "uniform_baseline", "jobs", "sequential",       "epsilon",
                                      "max_l0",        "rate_window", "rate_target",   "uniform_rate_target",
                                      "rate_tolerance", "reference_levels"};

constexpr std::string_view kFlags[] = {"uniform_baseline", "sequential"};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string normalize_key(std::string key) {
  std::replace(key.begin(), key.end(), '-', '_');
  return key;
}

[[noreturn]] void bad(const std::string& key, const std::string& value, const std::string& expected) {
  throw ConfigError(ConfigError::Kind::bad_value, key, key + ": '" + value + "' is not " + expected);
}

double to_double(const std::string& key, const std::string& value) {
  double v = 0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size()) bad(key, value, "a number");
  return v;
}

template <class Int>
Int to_integer(const std::string& key, const std::string& value) {
  Int v = 0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size()) bad(key, value, "a non-negative integer");
  return v;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "yes" || value == "on") return true;
  if (value == "0" || value == "false" || value == "no" || value == "off") return false;
  bad(key, value, "a boolean");
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::istringstream in(value);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void out_of_range(const std::string& key, const std::string& what) {
  throw ConfigError(ConfigError::Kind::out_of_range, key, key + ": " + what);
}

}  // namespace

std::span<const std::string_view> known_checks() { return kChecks; }
std::span<const std::string_view> config_keys() { return kKeys; }

std::map<std::string, std::string> parse_config_text(std::string_view text) {
  std::map<std::string, std::string> pairs;
  std::istringstream in{std::string(text)};
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(ConfigError::Kind::bad_value, "", "line " + std::to_string(number) + ": expected key = value");
    pairs[normalize_key(trim(line.substr(0, eq)))] = trim(line.substr(eq + 1));
  }
  return pairs;
}

RunConfig config_from_pairs(const std::map<std::string, std::string>& pairs) {
  for (const auto& [key, value] : pairs)
    if (std::find(std::begin(kKeys), std::end(kKeys), key) == std::end(kKeys))
      throw ConfigError(ConfigError::Kind::unknown_key, key, "unknown key '" + key + "'");

  RunConfig cfg;
  auto get = [&](std::string_view key) -> const std::string* {
    const auto it = pairs.find(std::string(key));
    return it == pairs.end() ? nullptr : &it->second;
  };

  if (const auto* v = get("problem")) {
    const auto names = builtin_problem_names();
    if (std::find(names.begin(), names.end(), *v) == names.end())
      throw ConfigError(ConfigError::Kind::unknown_problem, "problem", "unknown problem '" + *v + "'");
    cfg.problem = *v;
  }
  if (const auto* v = get("theta")) {
    cfg.thetas.clear();
    for (const auto& item : split_list(*v)) {
      const double t = to_double("theta", item);
      if (!(t > 0.0 && t <= 1.0)) out_of_range("theta", "must lie in (0, 1], got " + item);
      cfg.thetas.push_back(t);
    }
    if (cfg.thetas.empty()) bad("theta", *v, "a number");
  }
  if (const auto* v = get("marking")) {
    try {
      cfg.marking = parse_marking(*v);
    } catch (const InvalidArgument&) {
      bad("marking", *v, "one of min, binned, uniform");
    }
  }
  if (const auto* v = get("max_elements")) cfg.max_elements = to_integer<std::size_t>("max_elements", *v);
  if (const auto* v = get("eta_tol")) {
    const double t = to_double("eta_tol", *v);
    if (!(t >= 0.0)) out_of_range("eta_tol", "must be non-negative");
    cfg.eta_tol = t;
  }
  if (const auto* v = get("checks")) {
    for (const auto& name : split_list(*v)) {
      if (name == "all") {
        cfg.checks.assign(std::begin(kChecks), std::end(kChecks));
        continue;
      }
      if (std::find(std::begin(kChecks), std::end(kChecks), name) == std::end(kChecks))
        bad("checks", name, "a known checker");
      if (std::find(cfg.checks.begin(), cfg.checks.end(), name) == cfg.checks.end()) cfg.checks.push_back(name);
    }
  }
  if (const auto* v = get("out")) cfg.output_dir = *v;
  if (const auto* v = get("seed")) cfg.seed = to_integer<std::uint64_t>("seed", *v);
  if (const auto* v = get("uniform_baseline")) cfg.uniform_baseline = to_bool("uniform_baseline", *v);
  if (const auto* v = get("jobs")) {
    cfg.jobs = to_integer<unsigned>("jobs", *v);
    if (cfg.jobs == 0) out_of_range("jobs", "must be at least 1");
  }
  if (const auto* v = get("sequential")) cfg.sequential = to_bool("sequential", *v);
  if (const auto* v = get("epsilon")) {
    cfg.epsilon = to_double("epsilon", *v);
    if (!(cfg.epsilon >= 0.0 && cfg.epsilon < 1.0)) out_of_range("epsilon", "must lie in [0, 1)");
  }
  if (const auto* v = get("max_l0")) cfg.max_l0 = to_integer<std::size_t>("max_l0", *v);
  if (const auto* v = get("rate_window")) cfg.rate_window = to_integer<std::size_t>("rate_window", *v);
  if (const auto* v = get("rate_target")) cfg.rate_target = to_double("rate_target", *v);
  if (const auto* v = get("uniform_rate_target")) cfg.uniform_rate_target = to_double("uniform_rate_target", *v);
  if (const auto* v = get("rate_tolerance")) {
    cfg.rate_tolerance = to_double("rate_tolerance", *v);
    if (!(cfg.rate_tolerance > 0.0)) out_of_range("rate_tolerance", "must be positive");
  }
  if (const auto* v = get("reference_levels")) {
    cfg.reference_levels = to_integer<int>("reference_levels", *v);
    if (cfg.reference_levels < 1 || cfg.reference_levels > 6) out_of_range("reference_levels", "must lie in [1, 6]");
  }

  const auto initial = builtin_mesh(cfg.problem).num_triangles();
  if (cfg.max_elements < initial)
    out_of_range("max_elements", "must be at least the initial element count " + std::to_string(initial));
  return cfg;
}

std::optional<RunConfig> parse_config(int argc, const char* const* argv) {
  CLI::App app{"Adaptive P1 finite elements with Dorfler marking and newest vertex bisection"};
  app.allow_extras(false);
  std::string config_file;
  app.add_option("--config", config_file, "flat key=value file; flags override it");

  std::map<std::string, std::string> flag_values;
  std::map<std::string, bool> switches;
  std::vector<std::pair<std::string, CLI::Option*>> options;
  for (auto key : kKeys) {
    std::string flag = "--" + std::string(key);
    std::replace(flag.begin(), flag.end(), '_', '-');
    if (std::find(std::begin(kFlags), std::end(kFlags), key) != std::end(kFlags))
      options.emplace_back(std::string(key), app.add_flag(flag, switches[std::string(key)]));
    else
      options.emplace_back(std::string(key), app.add_option(flag, flag_values[std::string(key)]));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return std::nullopt;
  } catch (const CLI::ExtrasError& e) {
    throw ConfigError(ConfigError::Kind::unknown_key, e.what(), std::string("unknown argument: ") + e.what());
  } catch (const CLI::ParseError& e) {
    throw ConfigError(ConfigError::Kind::bad_value, "", e.what());
  }

  std::map<std::string, std::string> pairs;
  if (!config_file.empty()) {
    std::ifstream in(config_file);
    if (!in) throw ConfigError(ConfigError::Kind::io, "config", "cannot read " + config_file);
    std::stringstream text;
    text << in.rdbuf();
    pairs = parse_config_text(text.str());
  }
  for (const auto& [key, opt] : options) {
    if (opt->count() == 0) continue;
    const auto sw = switches.find(key);
    pairs[key] = sw != switches.end() ? (sw->second ? "true" : "false") : flag_values[key];
  }
  return config_from_pairs(pairs);
}

}  // namespace afem
