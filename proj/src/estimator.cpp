#include "afem/estimator.hpp"

#include "afem/errors.hpp"
#include "afem/mesh_io.hpp"
#include "afem/parallel.hpp"
#include "afem/quadrature.hpp"

#include <cmath>
#include <ostream>

namespace afem {

using detail::element_geometry;
using detail::element_gradient;

namespace {

constexpr double kFdStep = 1e-6;

// sum_i d_i A_ij by central differences.
Vector2 fd_diffusion_divergence(const LinearProblem& p, const Point& x) {
  const double h = kFdStep * (1.0 + x.norm());
  Vector2 d = Vector2::Zero();
  for (int i = 0; i < 2; ++i) {
    Point e = Point::Zero();
    e[i] = h;
    d += ((p.diffusion(x + e) - p.diffusion(x - e)).row(i) / (2.0 * h)).transpose();
  }
  return d;
}

double fd_flux_divergence(const NonlinearProblem& p, const Point& x, const Vector2& y) {
  const double h = kFdStep * (1.0 + x.norm());
  double d = 0.0;
  for (int i = 0; i < 2; ++i) {
    Point e = Point::Zero();
    e[i] = h;
    d += (p.flux(x + e, y)[i] - p.flux(x - e, y)[i]) / (2.0 * h);
  }
  return d;
}

// Strong residual r = L|_T U - f at a point with U(x) = u and grad U = grad.
double strong_residual(const Problem& problem, const Point& x, double u, const Vector2& grad) {
  if (const auto* lin = std::get_if<LinearProblem>(&problem)) {
    double r = lin->convection(x).dot(grad) + lin->reaction(x) * u - lin->source(x);
    if (!lin->constant_diffusion) {
      const Vector2 div = lin->diffusion_divergence ? lin->diffusion_divergence(x) : fd_diffusion_divergence(*lin, x);
      r -= div.dot(grad);
    }
    return r;
  }
  const auto& nl = std::get<NonlinearProblem>(problem);
  // For a flux A(grad u) and P1 functions the divergence vanishes elementwise.
  double r = nl.lower(x, u, grad) - nl.source(x);
  if (nl.flux_depends_on_x) r -= nl.flux_divergence ? nl.flux_divergence(x, grad) : fd_flux_divergence(nl, x, grad);
  return r;
}

Vector2 flux_at(const Problem& problem, const Point& x, const Vector2& grad) {
  if (const auto* lin = std::get_if<LinearProblem>(&problem)) return lin->diffusion(x) * grad;
  return std::get<NonlinearProblem>(problem).flux(x, grad);
}

bool flux_constant_per_element(const Problem& problem) {
  if (const auto* lin = std::get_if<LinearProblem>(&problem)) return lin->constant_diffusion;
  return !std::get<NonlinearProblem>(problem).flux_depends_on_x;
}

struct VolumeTerms {
  double volume_sq;
  double osc_sq;
};

VolumeTerms volume_terms(const Mesh& mesh, const DiscreteSolution& solution, const Problem& problem, std::size_t t) {
  const auto& rule = triangle_rule7();
  const auto g = element_geometry(mesh, t);
  const auto& tri = mesh.triangle(t);
  const Vector2 grad = element_gradient(mesh, g, t, solution.values);
  std::array<double, 7> r{};
  double mean = 0.0;
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const Point x = g.map(rule[q].lambda);
    double u = 0.0;
    for (std::size_t k = 0; k < 3; ++k) u += rule[q].lambda[k] * solution.values[tri[k]];
    r[q] = strong_residual(problem, x, u, grad);
    if (!std::isfinite(r[q])) throw QuadratureError("non-finite residual at a quadrature point");
    mean += rule[q].weight * r[q];
  }
  double vol = 0.0, osc = 0.0;
  for (std::size_t q = 0; q < rule.size(); ++q) {
    vol += rule[q].weight * r[q] * r[q];
    osc += rule[q].weight * (r[q] - mean) * (r[q] - mean);
  }
  // |T|^(2/d) with d = 2 times the L2(T) norms (weights are relative to |T|).
  return {g.area * g.area * vol, g.area * g.area * osc};
}

}  // namespace

EstimatorReport estimate(const Mesh& mesh, const DiscreteSolution& solution, const Problem& problem,
                         const AssemblyOptions& options) {
  detail::require_on_mesh(mesh, solution);
  const auto nt = mesh.num_triangles();
  EstimatorReport report;
  report.mesh_id = mesh.id();
  report.volume_sq.assign(nt, 0.0);
  report.osc_sq.assign(nt, 0.0);
  const unsigned chunks = std::max(1u, options.threads);

  for_chunks(nt, chunks, [&](unsigned, std::size_t begin, std::size_t end) {
    for (std::size_t t = begin; t < end; ++t) {
      const auto v = volume_terms(mesh, solution, problem, t);
      report.volume_sq[t] = v.volume_sq;
      report.osc_sq[t] = v.osc_sq;
    }
  });

  // Squared L2 norm of the normal flux jump on each interior edge.
  const auto ne = mesh.num_edges();
  std::vector<double> jump_sq(ne, 0.0);
  const bool constant_flux = flux_constant_per_element(problem);
  const auto& rule = edge_rule3();
  for_chunks(ne, chunks, [&](unsigned, std::size_t begin, std::size_t end) {
    for (std::size_t e = begin; e < end; ++e) {
      const auto& tris = mesh.edge_triangles(e);
      if (tris[1] < 0) continue;
      const auto& ed = mesh.edge(e);
      const Point a = mesh.vertex(static_cast<std::size_t>(ed[0]));
      const Point b = mesh.vertex(static_cast<std::size_t>(ed[1]));
      const Point d = b - a;
      const double len = d.norm();
      const Vector2 normal(d.y() / len, -d.x() / len);
      const auto t0 = static_cast<std::size_t>(tris[0]), t1 = static_cast<std::size_t>(tris[1]);
      const Vector2 g0 = element_gradient(mesh, element_geometry(mesh, t0), t0, solution.values);
      const Vector2 g1 = element_gradient(mesh, element_geometry(mesh, t1), t1, solution.values);
      if (constant_flux) {
        const Point mid = 0.5 * (a + b);
        const double j = (flux_at(problem, mid, g0) - flux_at(problem, mid, g1)).dot(normal);
        jump_sq[e] = len * j * j;
      } else {
        double s = 0.0;
        for (const auto& q : rule) {
          const Point x = a + q.t * d;
          const double j = (flux_at(problem, x, g0) - flux_at(problem, x, g1)).dot(normal);
          s += q.weight * j * j;
        }
        jump_sq[e] = len * s;
      }
    }
  });

  report.indicators_sq = report.volume_sq;
  for (std::size_t e = 0; e < ne; ++e) {
    if (jump_sq[e] == 0.0) continue;
    for (int t : mesh.edge_triangles(e)) {
      const auto ti = static_cast<std::size_t>(t);
      report.indicators_sq[ti] += std::sqrt(mesh.area(ti)) * jump_sq[e];
    }
  }
  for (std::size_t t = 0; t < nt; ++t) {
    report.eta_sq_total += report.indicators_sq[t];
    report.osc_sq_total += report.osc_sq[t];
  }
  return report;
}

std::vector<double> oscillations(const Mesh& mesh, const DiscreteSolution& solution, const Problem& problem) {
  detail::require_on_mesh(mesh, solution);
  std::vector<double> out(mesh.num_triangles());
  for (std::size_t t = 0; t < out.size(); ++t) out[t] = volume_terms(mesh, solution, problem, t).osc_sq;
  return out;
}

double local_sum(const EstimatorReport& report, std::span<const std::size_t> subset) {
  double s = 0.0;
  for (auto t : subset) {
    if (t >= report.indicators_sq.size()) throw IndexOutOfRange("element " + std::to_string(t) + " out of range");
    s += report.indicators_sq[t];
  }
  return s;
}

void write_estimator_csv(std::ostream& out, const EstimatorReport& report) {
  out << "elem_id,eta_sq,osc_sq\n";
  for (std::size_t t = 0; t < report.indicators_sq.size(); ++t)
    out << t << ',' << format_double(report.indicators_sq[t]) << ',' << format_double(report.osc_sq[t]) << '\n';
}

}  // namespace afem
