#pragma once

#include "afem/config.hpp"
#include "afem/driver.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace afem {

enum class CheckStatus { pass, fail, skipped };

struct CheckOutcome {
  std::string name;
  CheckStatus status = CheckStatus::skipped;
  std::string detail;
};

struct RunSummary {
  double theta = 0.0;
  std::filesystem::path directory;
  AfemTrace trace;
  std::vector<CheckOutcome> checks;
  /// Machine-readable "name: detail" lines; empty iff the run passed.
  std::vector<std::string> failures;
};

struct ExecuteOptions {
  /// Replaces the named builtin problem; the builtin mesh is still used.
  std::optional<Problem> problem_override;
  std::ostream* log = nullptr;
};

/// Runs the checks requested in `config` on a finished run.
std::vector<CheckOutcome> run_checks(const RunConfig& config, const Problem& problem, AfemResult& result,
                                     const AfemResult* uniform, unsigned threads);

/// One run per theta, written under config.output_dir (a theta_<value>
/// subdirectory each when sweeping).
std::vector<RunSummary> execute_runs(const RunConfig& config, const ExecuteOptions& options = {});

/// execute_runs, then a top-level failures.txt.  Returns 0 iff every
/// requested check passed and no solve failed.
int execute(const RunConfig& config, const ExecuteOptions& options = {});

}  // namespace afem
