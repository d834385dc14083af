#pragma once

#include "afem/driver.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace afem {

struct RunConfig {
  std::string problem = "lshape_poisson";
  /// More than one value runs a sweep, one output subdirectory per theta.
  std::vector<double> thetas{0.5};
  MarkingVariant marking = MarkingVariant::minimal;
  std::size_t max_elements = 10000;
  std::optional<double> eta_tol;
  std::vector<std::string> checks;
  std::filesystem::path output_dir = "afem_out";
  std::uint64_t seed = 0;
  bool uniform_baseline = false;
  unsigned jobs = 1;
  bool sequential = false;

  double epsilon = 0.5;
  std::size_t max_l0 = 5;
  std::size_t rate_window = 100;
  std::optional<double> rate_target;
  std::optional<double> uniform_rate_target;
  double rate_tolerance = 0.05;
  int reference_levels = 3;
};

/// Checker names accepted by "checks"; "all" expands to every one of them.
std::span<const std::string_view> known_checks();

/// Keys accepted in config files; each is also a flag with '_' spelled '-'.
std::span<const std::string_view> config_keys();

/// Flat key=value text.  '#' starts a comment, blank lines are ignored.
std::map<std::string, std::string> parse_config_text(std::string_view text);

/// Validates merged key/value pairs.  Throws ConfigError naming the key.
RunConfig config_from_pairs(const std::map<std::string, std::string>& pairs);

/// Command-line entry: reads --config first, then lets flags override it.
/// Returns nullopt when help was printed.
std::optional<RunConfig> parse_config(int argc, const char* const* argv);

}  // namespace afem
