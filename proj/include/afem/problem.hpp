#pragma once

#include "afem/mesh.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>

namespace afem {

using Vector2 = Eigen::Vector2d;
using Matrix2 = Eigen::Matrix2d;

struct ExactSolution {
  std::function<double(const Point&)> value;
  std::function<Vector2(const Point&)> gradient;
};

/// -div(A grad u) + b . grad u + c u = f with u = 0 on the boundary.
/// All coefficient closures must be pure.
struct LinearProblem {
  std::string name;
  std::function<Matrix2(const Point&)> diffusion;
  std::function<Vector2(const Point&)> convection;
  std::function<double(const Point&)> reaction;
  std::function<double(const Point&)> source;
  /// Column divergence of A, (sum_i d_i A_ij)_j.  Left empty when A is
  /// constant; otherwise approximated by central differences if missing.
  std::function<Vector2(const Point&)> diffusion_divergence;
  /// div b.  When present the ellipticity check uses the integrated-by-parts
  /// form of the convection term.
  std::function<double(const Point&)> convection_divergence;
  bool constant_diffusion = false;
  std::optional<ExactSolution> exact;
};

/// -div A(x, grad u) + g(x, u, grad u) = f with u = 0 on the boundary.
struct NonlinearProblem {
  std::string name;
  std::function<Vector2(const Point&, const Vector2&)> flux;
  /// Jacobian of the flux with respect to the gradient argument; symmetric.
  std::function<Matrix2(const Point&, const Vector2&)> flux_jacobian;
  bool flux_depends_on_x = false;
  /// div_x A(x, y) at fixed y.  Only used when flux_depends_on_x; central
  /// differences if missing.
  std::function<double(const Point&, const Vector2&)> flux_divergence;
  std::function<double(const Point&, double, const Vector2&)> lower;
  std::function<double(const Point&, double, const Vector2&)> lower_du;
  std::function<Vector2(const Point&, double, const Vector2&)> lower_dy;
  std::function<double(const Point&)> source;
  /// Declared Lipschitz and strong monotonicity constants of the operator.
  double c_lip = 1.0;
  double c_mono = 1.0;
  std::optional<ExactSolution> exact;
};

using Problem = std::variant<LinearProblem, NonlinearProblem>;

/// lshape_poisson, convection_diffusion, magnetostatics_nl or square_smooth.
/// Throws UnknownProblem.
Problem builtin_problem(std::string_view name);

/// Initial triangulation of the benchmark's domain.
Mesh builtin_mesh(std::string_view name);

std::span<const std::string_view> builtin_problem_names();

/// (-1,1)^2 \ [0,1]x[-1,0] as 6 right isosceles triangles.
Mesh lshape_mesh();
/// (0,1)^2 split into n x n cells, each cut along its rising diagonal.
Mesh unit_square_mesh(int cells_per_side);

const std::string& problem_name(const Problem& problem);
const std::optional<ExactSolution>& exact_solution(const Problem& problem);
bool is_nonlinear(const Problem& problem);
const std::function<double(const Point&)>& source_term(const Problem& problem);

struct PointwiseOperator {
  Vector2 flux;
  double reaction = 0.0;
};

/// Integrand of the weak form at one point: flux paired with grad v,
/// reaction paired with v.
PointwiseOperator apply_operator_pointwise(const Problem& problem, const Point& x, double u,
                                           const Vector2& grad);

/// The same operator expressed through the nonlinear interface.
NonlinearProblem as_nonlinear(const LinearProblem& problem, double c_lip, double c_mono);

struct EllipticityReport {
  double margin = 0.0;         ///< positive means the sufficient condition holds
  double poincare_scale = 0.0; ///< domain diameter used as C_Omega
  bool symmetric_diffusion = true;
  bool ok() const noexcept { return margin > 0.0 && symmetric_diffusion; }
};

/// Samples a sufficient pointwise ellipticity condition on a grid over the
/// domain of `domain`.
EllipticityReport check_ellipticity(const LinearProblem& problem, const Mesh& domain, int samples = 64);

struct MonotonicityReport {
  double min_ratio = 0.0;  ///< inf (A(y)-A(z)).(y-z) / |y-z|^2
  double max_ratio = 0.0;  ///< sup |A(y)-A(z)| / |y-z|
  bool ok(double c_mono) const noexcept { return min_ratio >= c_mono * (1.0 - 1e-12); }
};

/// Random-pair spot check of strong monotonicity and Lipschitz continuity of
/// the flux.  Gradients are drawn with components in [-scale, scale].
MonotonicityReport sample_monotonicity(const NonlinearProblem& problem, std::uint64_t seed, int pairs,
                                       double scale = 4.0);

}  // namespace afem
