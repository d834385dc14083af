#pragma once

#include "afem/assembly.hpp"

#include <iosfwd>
#include <span>
#include <vector>

namespace afem {

/// Weighted-residual indicators of one discrete solution.
struct EstimatorReport {
  std::uint64_t mesh_id = 0;
  std::vector<double> indicators_sq;  ///< eta(T)^2 = |T| ||r||_T^2 + |T|^(1/2) ||[flux.n]||^2_{dT \ boundary}
  std::vector<double> volume_sq;      ///< |T| ||r||_T^2
  std::vector<double> osc_sq;         ///< |T| ||r - mean_T r||_T^2
  double eta_sq_total = 0.0;
  double osc_sq_total = 0.0;
};

/// r = L|_T U - f is the elementwise strong residual.  Every interior edge
/// contributes its full jump term to both neighbours.
EstimatorReport estimate(const Mesh& mesh, const DiscreteSolution& solution, const Problem& problem,
                         const AssemblyOptions& options = {});

/// Per-element oscillations |T| ||(1 - Pi_0) r||_T^2.
std::vector<double> oscillations(const Mesh& mesh, const DiscreteSolution& solution, const Problem& problem);

/// Sum of eta(T)^2 over `subset`.  Throws IndexOutOfRange.
double local_sum(const EstimatorReport& report, std::span<const std::size_t> subset);

/// `elem_id,eta_sq,osc_sq`, one row per element.
void write_estimator_csv(std::ostream& out, const EstimatorReport& report);

}  // namespace afem
