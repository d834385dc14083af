#pragma once

#include "afem/assembly.hpp"

namespace afem {

struct NonlinearOptions {
  double tolerance = 1e-10;  ///< on ||F(U)|| / ||F(0)||
  int max_newton = 200;
  int max_fallback = 10000;
  bool use_newton = true;    ///< false runs the Zarantonello iteration only
  unsigned threads = 1;
};

struct NonlinearSolveResult {
  DiscreteSolution solution;
  int newton_steps = 0;
  int fallback_steps = 0;
  double residual = 0.0;            ///< ||F(U)||
  double reference_residual = 0.0;  ///< ||F(0)||
};

/// Galerkin residual F_i(U) = <L U - f, phi_i> over interior vertices and,
/// optionally, its Jacobian.
struct NonlinearSystem {
  DofMap dofs;
  Eigen::VectorXd residual;
  SparseMatrix jacobian;
};

NonlinearSystem assemble_nonlinear(const Mesh& mesh, const NonlinearProblem& problem,
                                   const DiscreteSolution& state, bool with_jacobian,
                                   const AssemblyOptions& options = {});

/// Damped Newton (step halving until the residual norm decreases) with a
/// Zarantonello fallback U <- U - (c_mono / c_lip^2) R^{-1} F(U), R the
/// discrete Laplacian.  Throws SolverError once both budgets are spent.
NonlinearSolveResult solve_nonlinear(const Mesh& mesh, const NonlinearProblem& problem,
                                     const DiscreteSolution& initial_guess, const NonlinearOptions& options = {});

/// Stiffness matrix of -Laplace on interior vertices (the Riesz map of H^1_0).
SparseMatrix laplace_matrix(const Mesh& mesh, const DofMap& dofs);

}  // namespace afem
