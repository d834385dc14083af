#include "afem/nonlinear.hpp"

#include "afem/errors.hpp"
#include "afem/parallel.hpp"
#include "afem/quadrature.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>

namespace afem {

using detail::element_geometry;
using detail::element_gradient;

NonlinearSystem assemble_nonlinear(const Mesh& mesh, const NonlinearProblem& problem,
                                   const DiscreteSolution& state, bool with_jacobian,
                                   const AssemblyOptions& options) {
  detail::require_on_mesh(mesh, state);
  NonlinearSystem sys;
  sys.dofs = make_dof_map(mesh);
  const auto n = static_cast<Eigen::Index>(sys.dofs.size());
  const auto& rule = triangle_rule7();
  const unsigned chunks = std::max(1u, options.threads);
  std::vector<std::vector<Eigen::Triplet<double>>> triplets(chunks);
  std::vector<std::vector<std::pair<int, double>>> parts(chunks);

  for_chunks(mesh.num_triangles(), chunks, [&](unsigned c, std::size_t begin, std::size_t end) {
    for (std::size_t t = begin; t < end; ++t) {
      const auto g = element_geometry(mesh, t);
      const auto& tri = mesh.triangle(t);
      const Vector2 grad = element_gradient(mesh, g, t, state.values);
      Vector2 flux = Vector2::Zero();
      Matrix2 jac = Matrix2::Zero();
      if (!problem.flux_depends_on_x) {
        flux = problem.flux(g.p[0], grad);
        if (with_jacobian) jac = problem.flux_jacobian(g.p[0], grad);
      }
      double r[3] = {};
      double k[3][3] = {};
      for (const auto& q : rule) {
        const Point x = g.map(q.lambda);
        const double w = q.weight * g.area;
        double u = 0.0;
        for (std::size_t i = 0; i < 3; ++i) u += q.lambda[i] * state.values[tri[i]];
        if (problem.flux_depends_on_x) {
          flux = problem.flux(x, grad);
          if (with_jacobian) jac = problem.flux_jacobian(x, grad);
        }
        const double lower = problem.lower(x, u, grad) - problem.source(x);
        if (!std::isfinite(lower) || !flux.allFinite())
          throw QuadratureError("non-finite operator value at a quadrature point");
        for (std::size_t i = 0; i < 3; ++i) r[i] += w * (flux.dot(g.grad_lambda[i]) + lower * q.lambda[i]);
        if (with_jacobian) {
          const double du = problem.lower_du(x, u, grad);
          const Vector2 dy = problem.lower_dy(x, u, grad);
          for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j)
              k[i][j] += w * ((jac * g.grad_lambda[j]).dot(g.grad_lambda[i]) +
                              (du * q.lambda[j] + dy.dot(g.grad_lambda[j])) * q.lambda[i]);
        }
      }
      for (std::size_t i = 0; i < 3; ++i) {
        const int di = sys.dofs.dof_of_vertex[static_cast<std::size_t>(tri[i])];
        if (di < 0) continue;
        parts[c].emplace_back(di, r[i]);
        if (!with_jacobian) continue;
        for (std::size_t j = 0; j < 3; ++j) {
          const int dj = sys.dofs.dof_of_vertex[static_cast<std::size_t>(tri[j])];
          if (dj >= 0) triplets[c].emplace_back(di, dj, k[i][j]);
        }
      }
    }
  });

  sys.residual = Eigen::VectorXd::Zero(n);
  for (const auto& p : parts)
    for (const auto& [i, v] : p) sys.residual[i] += v;
  if (with_jacobian) {
    std::vector<Eigen::Triplet<double>> all;
    for (auto& t : triplets) all.insert(all.end(), t.begin(), t.end());
    sys.jacobian.resize(n, n);
    sys.jacobian.setFromTriplets(all.begin(), all.end());
  }
  return sys;
}

SparseMatrix laplace_matrix(const Mesh& mesh, const DofMap& dofs) {
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto g = element_geometry(mesh, t);
    const auto& tri = mesh.triangle(t);
    for (std::size_t i = 0; i < 3; ++i) {
      const int di = dofs.dof_of_vertex[static_cast<std::size_t>(tri[i])];
      if (di < 0) continue;
      for (std::size_t j = 0; j < 3; ++j) {
        const int dj = dofs.dof_of_vertex[static_cast<std::size_t>(tri[j])];
        if (dj >= 0) trip.emplace_back(di, dj, g.area * g.grad_lambda[i].dot(g.grad_lambda[j]));
      }
    }
  }
  const auto n = static_cast<Eigen::Index>(dofs.size());
  SparseMatrix m(n, n);
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

NonlinearSolveResult solve_nonlinear(const Mesh& mesh, const NonlinearProblem& problem,
                                     const DiscreteSolution& initial_guess, const NonlinearOptions& options) {
  detail::require_on_mesh(mesh, initial_guess);
  const AssemblyOptions assembly{options.threads};
  NonlinearSolveResult result;
  const auto dofs = make_dof_map(mesh);
  if (dofs.size() == 0) {
    result.solution = zero_solution(mesh);
    return result;
  }

  result.reference_residual = assemble_nonlinear(mesh, problem, zero_solution(mesh), false, assembly).residual.norm();
  if (result.reference_residual == 0.0) {
    result.solution = zero_solution(mesh);
    return result;
  }
  const double target = options.tolerance * result.reference_residual;

  DiscreteSolution state = initial_guess;
  auto residual_of = [&](const DiscreteSolution& s) {
    return assemble_nonlinear(mesh, problem, s, false, assembly).residual;
  };
  Eigen::VectorXd f = residual_of(state);
  double norm = f.norm();
  auto done = [&] {
    result.solution = state;
    result.residual = norm;
    return result;
  };
  if (norm <= target) return done();

  if (options.use_newton) {
    for (int step = 0; step < options.max_newton; ++step) {
      const auto sys = assemble_nonlinear(mesh, problem, state, true, assembly);
      Eigen::VectorXd delta;
      try {
        delta = solve_sparse(sys.jacobian, -sys.residual);
      } catch (const SolverError&) {
        break;
      }
      bool accepted = false;
      double alpha = 1.0;
      for (int halving = 0; halving < 30; ++halving, alpha *= 0.5) {
        DiscreteSolution trial = state;
        for (std::size_t i = 0; i < dofs.size(); ++i)
          trial.values[dofs.vertex_of_dof[i]] += alpha * delta[static_cast<Eigen::Index>(i)];
        Eigen::VectorXd ft = residual_of(trial);
        if (ft.allFinite() && ft.norm() < norm) {
          state = std::move(trial);
          f = std::move(ft);
          norm = f.norm();
          accepted = true;
          break;
        }
      }
      if (!accepted) break;
      ++result.newton_steps;
      if (norm <= target) return done();
    }
  }

  // Zarantonello iteration.
  const SparseMatrix riesz_row = laplace_matrix(mesh, dofs);
  const Eigen::SparseMatrix<double, Eigen::ColMajor> riesz = riesz_row;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double, Eigen::ColMajor>> ldlt(riesz);
  if (ldlt.info() != Eigen::Success) throw SolverError("Riesz map factorization failed", norm);
  const double damping = problem.c_mono / (problem.c_lip * problem.c_lip);
  double best = norm;
  for (int step = 0; step < options.max_fallback; ++step) {
    const Eigen::VectorXd update = ldlt.solve(f);
    for (std::size_t i = 0; i < dofs.size(); ++i)
      state.values[dofs.vertex_of_dof[i]] -= damping * update[static_cast<Eigen::Index>(i)];
    f = residual_of(state);
    norm = f.norm();
    ++result.fallback_steps;
    if (!std::isfinite(norm)) break;
    best = std::min(best, norm);
    if (norm <= target) return done();
  }
  throw SolverError("nonlinear solve exhausted its iteration budget", best / result.reference_residual);
}

}  // namespace afem
