#include "afem/assembly.hpp"

#include "afem/errors.hpp"
#include "afem/mesh_io.hpp"
#include "afem/parallel.hpp"
#include "afem/quadrature.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <cmath>
#include <ostream>
#include <string>

namespace afem {

namespace detail {

ElementGeometry element_geometry(const Mesh& mesh, std::size_t t) {
  ElementGeometry g;
  const auto& tri = mesh.triangle(t);
  for (std::size_t k = 0; k < 3; ++k) g.p[k] = mesh.vertex(static_cast<std::size_t>(tri[k]));
  const Point e1 = g.p[1] - g.p[0], e2 = g.p[2] - g.p[0];
  const double det = e1.x() * e2.y() - e1.y() * e2.x();
  g.area = 0.5 * det;
  for (std::size_t k = 0; k < 3; ++k) {
    const Point& a = g.p[(k + 1) % 3];
    const Point& b = g.p[(k + 2) % 3];
    g.grad_lambda[k] = Vector2(a.y() - b.y(), b.x() - a.x()) / det;
  }
  return g;
}

Vector2 element_gradient(const Mesh& mesh, const ElementGeometry& g, std::size_t t, const Eigen::VectorXd& values) {
  const auto& tri = mesh.triangle(t);
  return values[tri[0]] * g.grad_lambda[0] + values[tri[1]] * g.grad_lambda[1] + values[tri[2]] * g.grad_lambda[2];
}

void require_on_mesh(const Mesh& mesh, const DiscreteSolution& solution) {
  if (solution.mesh_id != mesh.id() || static_cast<std::size_t>(solution.values.size()) != mesh.num_vertices())
    throw MeshMismatch("solution does not live on the given mesh");
}

}  // namespace detail

using detail::element_geometry;
using detail::element_gradient;
using detail::ElementGeometry;

DiscreteSolution zero_solution(const Mesh& mesh) {
  return {mesh.id(), Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.num_vertices()))};
}

DofMap make_dof_map(const Mesh& mesh) {
  DofMap map;
  map.dof_of_vertex.assign(mesh.num_vertices(), -1);
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
    if (mesh.is_boundary_vertex(v)) continue;
    map.dof_of_vertex[v] = static_cast<int>(map.vertex_of_dof.size());
    map.vertex_of_dof.push_back(static_cast<int>(v));
  }
  return map;
}

namespace {

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw QuadratureError(std::string("non-finite ") + what + " at a quadrature point");
}

}  // namespace

SparseSystem assemble_linear(const Mesh& mesh, const LinearProblem& problem, const AssemblyOptions& options) {
  SparseSystem sys;
  sys.mesh_id = mesh.id();
  sys.dofs = make_dof_map(mesh);
  const auto n = static_cast<Eigen::Index>(sys.dofs.size());
  const auto& rule = triangle_rule7();
  const unsigned chunks = std::max(1u, options.threads);

  std::vector<std::vector<Eigen::Triplet<double>>> triplets(chunks);
  std::vector<std::vector<std::pair<int, double>>> loads(chunks);

  for_chunks(mesh.num_triangles(), chunks, [&](unsigned c, std::size_t begin, std::size_t end) {
    auto& trip = triplets[c];
    auto& load = loads[c];
    trip.reserve(9 * (end - begin));
    for (std::size_t t = begin; t < end; ++t) {
      const auto g = element_geometry(mesh, t);
      double k[3][3] = {};
      double l[3] = {};
      for (const auto& q : rule) {
        const Point x = g.map(q.lambda);
        const double w = q.weight * g.area;
        const Matrix2 a = problem.diffusion(x);
        const Vector2 b = problem.convection(x);
        const double cr = problem.reaction(x);
        const double f = problem.source(x);
        require_finite(a.sum(), "diffusion");
        require_finite(b.sum(), "convection");
        require_finite(cr, "reaction");
        require_finite(f, "source");
        for (std::size_t i = 0; i < 3; ++i) {
          l[i] += w * f * q.lambda[i];
          for (std::size_t j = 0; j < 3; ++j) {
            k[i][j] += w * ((a * g.grad_lambda[j]).dot(g.grad_lambda[i]) + b.dot(g.grad_lambda[j]) * q.lambda[i] +
                            cr * q.lambda[j] * q.lambda[i]);
          }
        }
      }
      const auto& tri = mesh.triangle(t);
      for (std::size_t i = 0; i < 3; ++i) {
        const int di = sys.dofs.dof_of_vertex[static_cast<std::size_t>(tri[i])];
        if (di < 0) continue;
        load.emplace_back(di, l[i]);
        for (std::size_t j = 0; j < 3; ++j) {
          const int dj = sys.dofs.dof_of_vertex[static_cast<std::size_t>(tri[j])];
          if (dj >= 0) trip.emplace_back(di, dj, k[i][j]);
        }
      }
    }
  });

  std::vector<Eigen::Triplet<double>> all;
  std::size_t total = 0;
  for (const auto& t : triplets) total += t.size();
  all.reserve(total);
  for (auto& t : triplets) all.insert(all.end(), t.begin(), t.end());
  sys.matrix.resize(n, n);
  sys.matrix.setFromTriplets(all.begin(), all.end());
  sys.rhs = Eigen::VectorXd::Zero(n);
  for (const auto& load : loads)
    for (const auto& [i, v] : load) sys.rhs[i] += v;
  return sys;
}

namespace {

using ColMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;

bool numerically_symmetric(const ColMatrix& a) {
  const ColMatrix at = a.transpose();
  return (a - at).norm() <= 1e-14 * a.norm();
}

template <class Solver>
std::optional<Eigen::VectorXd> refine_with(Solver& solver, const ColMatrix& a, const Eigen::VectorXd& rhs,
                                           double tolerance, double& residual) {
  Eigen::VectorXd x = solver.solve(rhs);
  if (solver.info() != Eigen::Success || !x.allFinite()) return std::nullopt;
  const double bn = rhs.norm();
  for (int it = 0; it < 4; ++it) {
    const Eigen::VectorXd r = rhs - a * x;
    residual = r.norm() / bn;
    if (residual <= tolerance) return x;
    const Eigen::VectorXd dx = solver.solve(r);
    if (solver.info() != Eigen::Success || !dx.allFinite()) return std::nullopt;
    x += dx;
  }
  residual = (rhs - a * x).norm() / bn;
  if (residual <= tolerance) return x;
  return std::nullopt;
}

constexpr Eigen::Index kDirectLimit = 200000;

}  // namespace

Eigen::VectorXd solve_sparse(const SparseMatrix& matrix, const Eigen::VectorXd& rhs, double tolerance) {
  const auto n = matrix.rows();
  if (n == 0) return Eigen::VectorXd(0);
  if (rhs.norm() == 0.0) return Eigen::VectorXd::Zero(n);
  const ColMatrix a = matrix;
  double residual = std::numeric_limits<double>::infinity();
  const bool symmetric = numerically_symmetric(a);

  if (n <= kDirectLimit) {
    if (symmetric) {
      Eigen::SimplicialLDLT<ColMatrix> ldlt(a);
      if (ldlt.info() == Eigen::Success)
        if (auto x = refine_with(ldlt, a, rhs, tolerance, residual)) return *x;
    }
    Eigen::SparseLU<ColMatrix> lu;
    lu.analyzePattern(a);
    lu.factorize(a);
    if (lu.info() == Eigen::Success)
      if (auto x = refine_with(lu, a, rhs, tolerance, residual)) return *x;
    throw SolverError("sparse direct solve missed the residual target", residual);
  }

  if (symmetric) {
    Eigen::ConjugateGradient<ColMatrix, Eigen::Lower | Eigen::Upper, Eigen::IncompleteCholesky<double>> cg;
    cg.setTolerance(0.1 * tolerance);
    cg.setMaxIterations(static_cast<int>(std::min<Eigen::Index>(20 * n, 100000)));
    cg.compute(a);
    if (cg.info() == Eigen::Success)
      if (auto x = refine_with(cg, a, rhs, tolerance, residual)) return *x;
  }
  Eigen::BiCGSTAB<ColMatrix, Eigen::IncompleteLUT<double>> bicg;
  bicg.preconditioner().setDroptol(1e-6);
  bicg.preconditioner().setFillfactor(20);
  bicg.setTolerance(0.1 * tolerance);
  bicg.setMaxIterations(static_cast<int>(std::min<Eigen::Index>(20 * n, 100000)));
  bicg.compute(a);
  if (bicg.info() == Eigen::Success)
    if (auto x = refine_with(bicg, a, rhs, tolerance, residual)) return *x;
  throw SolverError("Krylov solve stagnated", residual);
}

DiscreteSolution expand(const Mesh& mesh, const DofMap& dofs, const Eigen::VectorXd& interior) {
  DiscreteSolution s = zero_solution(mesh);
  for (std::size_t i = 0; i < dofs.size(); ++i) s.values[dofs.vertex_of_dof[i]] = interior[static_cast<Eigen::Index>(i)];
  return s;
}

Eigen::VectorXd restrict_to_dofs(const DofMap& dofs, const DiscreteSolution& solution) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(dofs.size()));
  for (std::size_t i = 0; i < dofs.size(); ++i) x[static_cast<Eigen::Index>(i)] = solution.values[dofs.vertex_of_dof[i]];
  return x;
}

DiscreteSolution solve_linear(const SparseSystem& system) {
  DiscreteSolution s;
  s.mesh_id = system.mesh_id;
  s.values = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(system.dofs.dof_of_vertex.size()));
  const Eigen::VectorXd x = solve_sparse(system.matrix, system.rhs);
  for (std::size_t i = 0; i < system.dofs.size(); ++i) s.values[system.dofs.vertex_of_dof[i]] = x[static_cast<Eigen::Index>(i)];
  return s;
}

EnergyProducts energy_products(const Mesh& mesh, const Problem& problem, const DiscreteSolution& w,
                               const DiscreteSolution& v) {
  detail::require_on_mesh(mesh, w);
  detail::require_on_mesh(mesh, v);
  const auto& rule = triangle_rule7();
  EnergyProducts out;
  if (const auto* lin = std::get_if<LinearProblem>(&problem)) {
    double bwv = 0.0, bdd = 0.0;
    const Eigen::VectorXd d = w.values - v.values;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
      const auto g = element_geometry(mesh, t);
      const auto& tri = mesh.triangle(t);
      const Vector2 gw = element_gradient(mesh, g, t, w.values);
      const Vector2 gv = element_gradient(mesh, g, t, v.values);
      const Vector2 gd = element_gradient(mesh, g, t, d);
      for (const auto& q : rule) {
        const Point x = g.map(q.lambda);
        const double weight = q.weight * g.area;
        double wq = 0.0, vq = 0.0, dq = 0.0;
        for (std::size_t k = 0; k < 3; ++k) {
          wq += q.lambda[k] * w.values[tri[k]];
          vq += q.lambda[k] * v.values[tri[k]];
          dq += q.lambda[k] * d[tri[k]];
        }
        const Matrix2 a = lin->diffusion(x);
        const Vector2 b = lin->convection(x);
        const double c = lin->reaction(x);
        bwv += weight * ((a * gw).dot(gv) + b.dot(gw) * vq + c * wq * vq);
        bdd += weight * ((a * gd).dot(gd) + b.dot(gd) * dq + c * dq * dq);
      }
    }
    out.b_wv = bwv;
    out.dl_sq = bdd;
    return out;
  }
  const auto& nl = std::get<NonlinearProblem>(problem);
  double dl = 0.0;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto g = element_geometry(mesh, t);
    const auto& tri = mesh.triangle(t);
    const Vector2 gw = element_gradient(mesh, g, t, w.values);
    const Vector2 gv = element_gradient(mesh, g, t, v.values);
    for (const auto& q : rule) {
      const Point x = g.map(q.lambda);
      double wq = 0.0, vq = 0.0;
      for (std::size_t k = 0; k < 3; ++k) {
        wq += q.lambda[k] * w.values[tri[k]];
        vq += q.lambda[k] * v.values[tri[k]];
      }
      dl += q.weight * g.area *
            ((nl.flux(x, gw) - nl.flux(x, gv)).dot(gw - gv) + (nl.lower(x, wq, gw) - nl.lower(x, vq, gv)) * (wq - vq));
    }
  }
  out.dl_sq = dl;
  return out;
}

double grad_distance_sq(const Mesh& mesh, const DiscreteSolution& w, const DiscreteSolution& v) {
  detail::require_on_mesh(mesh, w);
  detail::require_on_mesh(mesh, v);
  const Eigen::VectorXd d = w.values - v.values;
  double sum = 0.0;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto g = element_geometry(mesh, t);
    sum += g.area * element_gradient(mesh, g, t, d).squaredNorm();
  }
  return sum;
}

double h1_error_sq(const Mesh& mesh, const DiscreteSolution& solution, const ExactSolution& exact) {
  detail::require_on_mesh(mesh, solution);
  const auto& rule = triangle_rule7();
  double sum = 0.0;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto g = element_geometry(mesh, t);
    const Vector2 gu = element_gradient(mesh, g, t, solution.values);
    for (const auto& q : rule) sum += q.weight * g.area * (exact.gradient(g.map(q.lambda)) - gu).squaredNorm();
  }
  return sum;
}

DiscreteSolution interpolate(const Mesh& mesh, const std::function<double(const Point&)>& u) {
  DiscreteSolution s = zero_solution(mesh);
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v)
    if (!mesh.is_boundary_vertex(v)) s.values[static_cast<Eigen::Index>(v)] = u(mesh.vertex(v));
  return s;
}

namespace {

std::optional<std::array<double, 3>> barycentric(const ElementGeometry& g, const Point& x) {
  std::array<double, 3> lambda{};
  for (std::size_t k = 0; k < 3; ++k) lambda[k] = 1.0 / 3.0 + g.grad_lambda[k].dot(x - (g.p[0] + g.p[1] + g.p[2]) / 3.0);
  for (double l : lambda)
    if (l < -1e-12) return std::nullopt;
  return lambda;
}

}  // namespace

std::optional<std::size_t> locate(const Mesh& mesh, const Point& x) {
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t)
    if (barycentric(element_geometry(mesh, t), x)) return t;
  return std::nullopt;
}

double evaluate(const Mesh& mesh, const DiscreteSolution& solution, const Point& x) {
  detail::require_on_mesh(mesh, solution);
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto g = element_geometry(mesh, t);
    if (auto lambda = barycentric(g, x)) {
      const auto& tri = mesh.triangle(t);
      return (*lambda)[0] * solution.values[tri[0]] + (*lambda)[1] * solution.values[tri[1]] +
             (*lambda)[2] * solution.values[tri[2]];
    }
  }
  throw IndexOutOfRange("point outside the mesh");
}

DiscreteSolution transfer(const Mesh& coarse, const DiscreteSolution& solution, const Mesh& fine) {
  detail::require_on_mesh(coarse, solution);
  if (!refines(fine, coarse)) throw GenealogyMismatch("target mesh does not refine the solution's mesh");
  DiscreteSolution out = zero_solution(fine);
  fine.genealogy()->access([&](const Genealogy::Ledger& ledger) {
    std::vector<double> value(ledger.vertex_count(), 0.0);
    std::vector<char> known(ledger.vertex_count(), 0);
    for (std::size_t v = 0; v < coarse.num_vertices(); ++v) {
      const auto gid = static_cast<std::size_t>(coarse.global_vertex(v));
      value[gid] = solution.values[static_cast<Eigen::Index>(v)];
      known[gid] = 1;
    }
    std::vector<std::int32_t> stack;
    auto resolve = [&](std::int32_t root) {
      stack.push_back(root);
      while (!stack.empty()) {
        const auto id = stack.back();
        if (known[static_cast<std::size_t>(id)]) {
          stack.pop_back();
          continue;
        }
        const auto& par = ledger.vertex_parents(id);
        if (par[0] < 0) throw GenealogyMismatch("initial vertex missing from the coarse mesh");
        bool ready = true;
        for (auto p : par)
          if (!known[static_cast<std::size_t>(p)]) {
            stack.push_back(p);
            ready = false;
          }
        if (!ready) continue;
        value[static_cast<std::size_t>(id)] = 0.5 * (value[static_cast<std::size_t>(par[0])] + value[static_cast<std::size_t>(par[1])]);
        known[static_cast<std::size_t>(id)] = 1;
        stack.pop_back();
      }
    };
    for (std::size_t v = 0; v < fine.num_vertices(); ++v) {
      const auto gid = fine.global_vertex(v);
      resolve(gid);
      out.values[static_cast<Eigen::Index>(v)] = fine.is_boundary_vertex(v) ? 0.0 : value[static_cast<std::size_t>(gid)];
    }
  });
  return out;
}

void write_solution(std::ostream& out, const DiscreteSolution& solution) {
  out << solution.values.size() << '\n';
  for (Eigen::Index i = 0; i < solution.values.size(); ++i) out << format_double(solution.values[i]) << '\n';
}

}  // namespace afem
