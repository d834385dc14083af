#pragma once

#include "afem/mesh.hpp"
#include "afem/problem.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

namespace afem {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Nodal P1 coefficients over all vertices of one mesh; boundary entries are 0.
struct DiscreteSolution {
  std::uint64_t mesh_id = 0;
  Eigen::VectorXd values;
};

DiscreteSolution zero_solution(const Mesh& mesh);

/// Interior vertices numbered consecutively; boundary vertices map to -1.
struct DofMap {
  std::vector<int> dof_of_vertex;
  std::vector<int> vertex_of_dof;
  std::size_t size() const noexcept { return vertex_of_dof.size(); }
};

DofMap make_dof_map(const Mesh& mesh);

/// Galerkin system restricted to interior vertices.
struct SparseSystem {
  std::uint64_t mesh_id = 0;
  DofMap dofs;
  SparseMatrix matrix;
  Eigen::VectorXd rhs;
};

struct AssemblyOptions {
  /// Element loops are split into this many contiguous chunks whose
  /// contributions are merged in element order, so the result does not
  /// depend on the thread count.
  unsigned threads = 1;
};

/// Throws QuadratureError when a coefficient sample is not finite.
SparseSystem assemble_linear(const Mesh& mesh, const LinearProblem& problem, const AssemblyOptions& options = {});

/// Throws SolverError when the relative residual stays above 1e-10.
DiscreteSolution solve_linear(const SparseSystem& system);

/// Direct factorization up to 2e5 unknowns, preconditioned Krylov beyond,
/// followed by iterative refinement.  The contract is the relative residual.
Eigen::VectorXd solve_sparse(const SparseMatrix& matrix, const Eigen::VectorXd& rhs, double tolerance = 1e-10);

/// Scatter interior values back onto all vertices.
DiscreteSolution expand(const Mesh& mesh, const DofMap& dofs, const Eigen::VectorXd& interior);
Eigen::VectorXd restrict_to_dofs(const DofMap& dofs, const DiscreteSolution& solution);

struct EnergyProducts {
  std::optional<double> b_wv;  ///< b(w, v); linear problems only
  double dl_sq = 0.0;          ///< <Lw - Lv, w - v>
};

/// Throws MeshMismatch unless both solutions live on `mesh`.
EnergyProducts energy_products(const Mesh& mesh, const Problem& problem, const DiscreteSolution& w,
                               const DiscreteSolution& v);

/// ||grad(w - v)||^2, exact for P1.
double grad_distance_sq(const Mesh& mesh, const DiscreteSolution& w, const DiscreteSolution& v);

/// ||grad(u - U)||^2 against an exact gradient, by 7-point quadrature.
double h1_error_sq(const Mesh& mesh, const DiscreteSolution& solution, const ExactSolution& exact);

/// Nodal interpolant of a continuous function, zero on the boundary.
DiscreteSolution interpolate(const Mesh& mesh, const std::function<double(const Point&)>& u);

/// Point location by linear search; nullopt outside the mesh.
std::optional<std::size_t> locate(const Mesh& mesh, const Point& x);
/// Value of the P1 function at x.  Throws IndexOutOfRange outside the mesh.
double evaluate(const Mesh& mesh, const DiscreteSolution& solution, const Point& x);

/// Exact prolongation onto a refinement: every new vertex takes the mean of
/// the endpoints of the edge it bisects.  Throws MeshMismatch if `solution`
/// does not live on `coarse`, GenealogyMismatch if `fine` does not refine it.
DiscreteSolution transfer(const Mesh& coarse, const DiscreteSolution& solution, const Mesh& fine);

/// `NV` followed by one nodal value per line.
void write_solution(std::ostream& out, const DiscreteSolution& solution);

namespace detail {

/// Geometry of one element; gradients of the barycentric coordinates are constant.
struct ElementGeometry {
  std::array<Point, 3> p;
  std::array<Vector2, 3> grad_lambda;
  double area = 0.0;

  Point map(const std::array<double, 3>& lambda) const {
    return lambda[0] * p[0] + lambda[1] * p[1] + lambda[2] * p[2];
  }
};

ElementGeometry element_geometry(const Mesh& mesh, std::size_t t);

Vector2 element_gradient(const Mesh& mesh, const ElementGeometry& g, std::size_t t, const Eigen::VectorXd& values);

void require_on_mesh(const Mesh& mesh, const DiscreteSolution& solution);

}  // namespace detail

}  // namespace afem
