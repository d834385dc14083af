#pragma once

#include "afem/driver.hpp"

#include <optional>
#include <span>
#include <vector>

namespace afem {

// Every checker below reads only the trace, so re-running it on a trace
// read back from CSV reproduces the result bit for bit.

struct EstimatorReductionFit {
  double q = 0.0;
  double c = 0.0;
  std::vector<std::size_t> violations;
  std::size_t steps = 0;
  bool pass() const { return q < 1.0 && violations.empty(); }
};

/// eta_{l+1}^2 <= q eta_l^2 + C ||grad(U_{l+1} - U_l)||^2 with C capped at
/// `c_cap`.  Needs at least three records.
EstimatorReductionFit check_estimator_reduction(const AfemTrace& trace, double c_cap = 1e6);

struct QuasiOrthogonalityResult {
  double epsilon = 0.0;
  /// Smallest l0 such that every guarded step l >= l0 satisfies the
  /// inequality; empty when the last guarded step fails or none exist.
  std::optional<std::size_t> first_index;
  std::vector<std::size_t> steps;   ///< levels that passed the noise guard
  std::vector<double> slack;        ///< rhs - lhs per guarded step
  std::vector<std::size_t> failures;
};

/// |||U_{l+1}-U_l|||^2 <= |||u-U_l|||^2/(1-eps) - |||u-U_{l+1}|||^2, using the
/// reference errors in the trace.  Only steps where both errors exceed
/// `noise_factor`^2 times the noise floor are used.
QuasiOrthogonalityResult check_quasi_orthogonality(const AfemTrace& trace, double epsilon, double noise_factor = 10.0);

struct RLinearFit {
  double q = 0.0;
  double c = 0.0;
  double q_lsq = 0.0;   ///< geometric mean decay from a log-linear fit
  bool pass = false;
};

/// Fits eta_{l+k}^2 <= C q^k eta_l^2 over all pairs with C <= c_max.
/// Needs at least five records.
RLinearFit check_rlinear(const AfemTrace& trace, double c_max = 100.0);

/// Implied constant max_{l<m} eta_m^2 / (q^{m-l} eta_l^2).
double rlinear_constant(const AfemTrace& trace, double q);

struct RateFit {
  double s = 0.0;
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;            ///< root mean square of the fit residuals
  std::vector<std::size_t> window;  ///< levels used
};

/// Least squares for log y against log x.  Needs at least two points.
RateFit fit_loglog(std::span<const double> x, std::span<const double> y);

/// log eta_l against log(#T_l - #T_0) over levels with at least
/// `min_extra_elements` new elements.  Needs six such levels.
RateFit fit_rate(const AfemTrace& trace, std::size_t min_extra_elements = 100);

/// Same window, for the exact H1 error.
RateFit fit_error_rate(const AfemTrace& trace, std::size_t min_extra_elements = 100);

struct MarkingOptimalityRow {
  std::size_t level = 0;
  double q_d = 0.0;
  bool applicable = false;
  bool holds = true;
  double refined_fraction = 0.0;    ///< sum over refined elements / eta_l^2
};

inline constexpr double kDefaultQD[] = {0.5, 0.7, 0.9};

/// For each step and q_D: if eta_{l+1}^2 <= q_D eta_l^2 then the refined
/// elements must carry at least theta eta_l^2.
std::vector<MarkingOptimalityRow> check_marking_optimality(const AfemTrace& trace,
                                                           std::span<const double> q_values = kDefaultQD);

/// ||grad(U_fine - U_coarse)||^2 / sum of coarse indicators over refined
/// elements; 0 when nothing was refined.
double check_discrete_reliability(const Mesh& coarse, const Mesh& fine, const EstimatorReport& coarse_report,
                                  const DiscreteSolution& coarse_solution, const DiscreteSolution& fine_solution);

struct DiscreteReliabilitySummary {
  std::vector<std::size_t> levels;
  std::vector<double> ratios;
  double max = 0.0;
  double min = 0.0;
  double spread() const { return min > 0.0 ? max / min : std::numeric_limits<double>::infinity(); }
};

/// The same ratio from the trace columns, over steps with refinement whose
/// coarse mesh has at least `min_extra_elements` new elements.
DiscreteReliabilitySummary discrete_reliability_ratios(const AfemTrace& trace, std::size_t min_extra_elements = 0);

/// max_l (#T_l - #T_0) / sum_{j<l} #M_j.
double closure_constant(const AfemTrace& trace);

struct ReliabilityFit {
  double c_rel = 0.0;   ///< max err^2 / eta^2
  double c_eff = 0.0;   ///< max eta^2 / (err^2 + osc^2)
};

/// From the exact H1 errors; both constants are NaN without them.
ReliabilityFit fit_reliability(const AfemTrace& trace);

}  // namespace afem
