#pragma once

#include "afem/estimator.hpp"
#include "afem/marking.hpp"
#include "afem/mesh.hpp"
#include "afem/nonlinear.hpp"
#include "afem/problem.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace afem {

enum class MarkingVariant { minimal, binned, uniform };

std::string_view to_string(MarkingVariant v);
/// "min", "binned" or "uniform".  Throws InvalidArgument.
MarkingVariant parse_marking(std::string_view text);

struct AfemOptions {
  double theta = 0.5;
  MarkingVariant marking = MarkingVariant::minimal;
  /// No mesh with more elements is ever solved on.
  std::size_t max_elements = 10000;
  /// Stop once eta <= eta_tol.
  std::optional<double> eta_tol;
  int max_iterations = 500;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  NonlinearOptions nonlinear;
};

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// One iteration of the adaptive loop.  Quantities that relate level l to
/// level l+1 are NaN (or 0 for counts) on the last record.
struct IterationRecord {
  std::size_t level = 0;
  std::size_t n_elements = 0;
  std::size_t n_marked = 0;
  std::size_t n_refined = 0;        ///< #(T_l \ T_{l+1})
  double eta_sq = 0.0;
  double osc_sq = 0.0;
  double refined_eta_sq = kNaN;     ///< sum of eta_l(T)^2 over T_l \ T_{l+1}
  double diff_grad_sq = kNaN;       ///< ||grad(U_{l+1} - U_l)||^2
  double diff_energy_sq = kNaN;     ///< |||U_{l+1} - U_l|||^2, or dl(U_{l+1}, U_l)^2
  double energy_err_sq = kNaN;      ///< |||u_ref - U_l|||^2, or dl(u_ref, U_l)^2
  double h1_err_sq = kNaN;          ///< ||grad(u - U_l)||^2 for benchmarks with an exact solution
  int solver_iterations = 0;        ///< Newton steps; 0 for linear problems
};

struct RunMetadata {
  std::string problem;
  double theta = 0.0;
  MarkingVariant marking = MarkingVariant::minimal;
  std::uint64_t seed = 0;
};

struct AfemTrace {
  RunMetadata meta;
  std::vector<IterationRecord> records;
  /// |||u_ref - U_L|||^2 of the last iterate once a reference is attached.
  double noise_floor_sq = kNaN;
};

struct AfemResult {
  AfemTrace trace;
  std::vector<Mesh> meshes;
  std::vector<DiscreteSolution> solutions;
  std::vector<EstimatorReport> reports;
  std::vector<RefinementRecord> refinements;
  std::vector<double> wall_seconds;
  /// Set when a solve failed; the trace then ends at the last good level.
  std::optional<std::string> failure;
};

/// Solve, estimate, mark, refine until a stopping rule fires.  Nonlinear
/// solves start from the previous solution prolongated to the new mesh.
AfemResult run_afem(const Problem& problem, const Mesh& initial_mesh, const AfemOptions& options);

/// Discrete solution of `problem` on `mesh`.  `warm_start` is used by
/// nonlinear solves when it lives on `mesh`.
struct SolveOutcome {
  DiscreteSolution solution;
  int iterations = 0;
};
SolveOutcome solve_problem(const Mesh& mesh, const Problem& problem, const DiscreteSolution* warm_start,
                           const NonlinearOptions& options, unsigned threads = 1);

struct ReferenceSolution {
  Mesh mesh;
  DiscreteSolution solution;
};

/// Galerkin solution on the overlay of `finest` with its `levels`-fold
/// uniform refinement.
ReferenceSolution compute_reference(const Problem& problem, const Mesh& finest, const DiscreteSolution& finest_solution,
                                    int levels = 3, const NonlinearOptions& options = {}, unsigned threads = 1);

/// Fills energy_err_sq and noise_floor_sq from a reference solution.
void attach_reference_errors(AfemResult& result, const Problem& problem, const ReferenceSolution& reference);

}  // namespace afem
