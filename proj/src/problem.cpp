#include "afem/problem.hpp"

#include "afem/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

namespace afem {

namespace {

using std::numbers::pi;

constexpr std::array<std::string_view, 4> kNames = {"lshape_poisson", "convection_diffusion",
                                                    "magnetostatics_nl", "square_smooth"};

// Radial cutoff: 1 for r <= 1/4, 0 for r >= 3/4, quintic smoothstep between.
struct Cutoff {
  double value, d1, d2;
};

Cutoff cutoff(double r) {
  if (r <= 0.25) return {1.0, 0.0, 0.0};
  if (r >= 0.75) return {0.0, 0.0, 0.0};
  const double t = 2.0 * r - 0.5;
  const double s = t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
  const double ds = 30.0 * t * t * (1.0 - t) * (1.0 - t);
  const double dds = 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t);
  return {1.0 - s, -2.0 * ds, -4.0 * dds};
}

// Polar angle in [0, 2 pi); the L-shape occupies (0, 3 pi / 2).
double angle(const Point& x) {
  double phi = std::atan2(x.y(), x.x());
  if (phi < 0.0) phi += 2.0 * pi;
  return phi;
}

double corner_value(const Point& x) {
  const double r = x.norm();
  if (r >= 0.75) return 0.0;
  return cutoff(r).value * std::pow(r, 2.0 / 3.0) * std::sin(2.0 * angle(x) / 3.0);
}

Vector2 corner_gradient(const Point& x) {
  const double r = x.norm();
  if (r >= 0.75 || r == 0.0) return Vector2::Zero();
  const double phi = angle(x);
  const auto c = cutoff(r);
  const double s = std::pow(r, 2.0 / 3.0) * std::sin(2.0 * phi / 3.0);
  const double ds_dr = (2.0 / 3.0) * std::pow(r, -1.0 / 3.0) * std::sin(2.0 * phi / 3.0);
  const double ds_dphi_over_r = (2.0 / 3.0) * std::pow(r, -1.0 / 3.0) * std::cos(2.0 * phi / 3.0);
  const Vector2 er(std::cos(phi), std::sin(phi));
  const Vector2 ephi(-std::sin(phi), std::cos(phi));
  return c.value * (ds_dr * er + ds_dphi_over_r * ephi) + s * c.d1 * er;
}

// -Laplace(rho s) = -s (rho'' + 7/3 rho' / r), since s is harmonic.
double corner_source(const Point& x) {
  const double r = x.norm();
  if (r <= 0.25 || r >= 0.75) return 0.0;
  const auto c = cutoff(r);
  const double s = std::pow(r, 2.0 / 3.0) * std::sin(2.0 * angle(x) / 3.0);
  return -s * (c.d2 + (7.0 / 3.0) * c.d1 / r);
}

LinearProblem make_poisson(std::string name) {
  LinearProblem p;
  p.name = std::move(name);
  p.diffusion = [](const Point&) { return Matrix2::Identity().eval(); };
  p.convection = [](const Point&) { return Vector2::Zero().eval(); };
  p.reaction = [](const Point&) { return 0.0; };
  p.convection_divergence = [](const Point&) { return 0.0; };
  p.constant_diffusion = true;
  return p;
}

LinearProblem lshape_poisson() {
  auto p = make_poisson("lshape_poisson");
  p.source = corner_source;
  p.exact = ExactSolution{corner_value, corner_gradient};
  return p;
}

LinearProblem square_smooth() {
  auto p = make_poisson("square_smooth");
  p.source = [](const Point& x) { return 2.0 * pi * pi * std::sin(pi * x.x()) * std::sin(pi * x.y()); };
  p.exact = ExactSolution{
      [](const Point& x) { return std::sin(pi * x.x()) * std::sin(pi * x.y()); },
      [](const Point& x) {
        return Vector2(pi * std::cos(pi * x.x()) * std::sin(pi * x.y()),
                       pi * std::sin(pi * x.x()) * std::cos(pi * x.y()));
      }};
  return p;
}

LinearProblem convection_diffusion() {
  auto p = make_poisson("convection_diffusion");
  p.convection = [](const Point&) { return Vector2(3.0, 2.5); };
  p.reaction = [](const Point&) { return 1.0; };
  p.source = [](const Point&) { return 1.0; };
  return p;
}

// A(y) = (1 + 1/(1+|y|^2)) y.
Vector2 magnetic_flux(const Vector2& y) { return (1.0 + 1.0 / (1.0 + y.squaredNorm())) * y; }

Matrix2 magnetic_jacobian(const Vector2& y) {
  const double q = 1.0 + y.squaredNorm();
  const double s = -2.0 / (q * q);
  const double d = 1.0 + 1.0 / q;
  const double off = s * y.x() * y.y();
  Matrix2 j;
  j << s * y.x() * y.x() + d, off, off, s * y.y() * y.y() + d;
  return j;
}

NonlinearProblem magnetostatics_nl() {
  NonlinearProblem p;
  p.name = "magnetostatics_nl";
  p.flux = [](const Point&, const Vector2& y) { return magnetic_flux(y); };
  p.flux_jacobian = [](const Point&, const Vector2& y) { return magnetic_jacobian(y); };
  p.lower = [](const Point&, double, const Vector2&) { return 0.0; };
  p.lower_du = [](const Point&, double, const Vector2&) { return 0.0; };
  p.lower_dy = [](const Point&, double, const Vector2&) { return Vector2::Zero().eval(); };
  // Radial eigenvalue 1 + (1-t^2)/(1+t^2)^2 of the Jacobian attains 7/8 at
  // t^2 = 3; the tangential one lies in (1, 2].
  p.c_mono = 0.875;
  p.c_lip = 2.0;

  // u = sin(pi x) sin(pi y); f = -(mu Lap u + 2 mu'(|grad u|^2) grad u^T H grad u)
  // with mu(t) = 1 + 1/(1+t).
  p.exact = ExactSolution{
      [](const Point& x) { return std::sin(pi * x.x()) * std::sin(pi * x.y()); },
      [](const Point& x) {
        return Vector2(pi * std::cos(pi * x.x()) * std::sin(pi * x.y()),
                       pi * std::sin(pi * x.x()) * std::cos(pi * x.y()));
      }};
  p.source = [](const Point& x) {
    const double sx = std::sin(pi * x.x()), sy = std::sin(pi * x.y());
    const double cx = std::cos(pi * x.x()), cy = std::cos(pi * x.y());
    const Vector2 g(pi * cx * sy, pi * sx * cy);
    Matrix2 h;
    h << -pi * pi * sx * sy, pi * pi * cx * cy, pi * pi * cx * cy, -pi * pi * sx * sy;
    const double t = g.squaredNorm();
    const double mu = 1.0 + 1.0 / (1.0 + t);
    const double dmu = -1.0 / ((1.0 + t) * (1.0 + t));
    return -(mu * h.trace() + 2.0 * dmu * g.dot(h * g));
  };
  return p;
}

}  // namespace

std::span<const std::string_view> builtin_problem_names() { return kNames; }

Problem builtin_problem(std::string_view name) {
  if (name == "lshape_poisson") return lshape_poisson();
  if (name == "convection_diffusion") return convection_diffusion();
  if (name == "magnetostatics_nl") return magnetostatics_nl();
  if (name == "square_smooth") return square_smooth();
  throw UnknownProblem("unknown problem '" + std::string(name) + "'");
}

Mesh lshape_mesh() {
  const std::vector<Point> v = {{-1, -1}, {0, -1}, {-1, 0}, {0, 0}, {1, 0}, {-1, 1}, {0, 1}, {1, 1}};
  const std::vector<Triangle> t = {{0, 1, 3}, {0, 3, 2}, {2, 3, 5}, {3, 6, 5}, {3, 4, 7}, {3, 7, 6}};
  return load_initial_mesh(v, t, detect_boundary(t));
}

Mesh unit_square_mesh(int n) {
  if (n < 1) throw IndexOutOfRange("unit square needs at least one cell per side");
  std::vector<Point> v;
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) v.emplace_back(static_cast<double>(i) / n, static_cast<double>(j) / n);
  std::vector<Triangle> t;
  auto id = [n](int i, int j) { return j * (n + 1) + i; };
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      t.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      t.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  return load_initial_mesh(v, t, detect_boundary(t));
}

Mesh builtin_mesh(std::string_view name) {
  if (name == "lshape_poisson") return lshape_mesh();
  if (name == "convection_diffusion" || name == "magnetostatics_nl" || name == "square_smooth")
    return unit_square_mesh(2);
  throw UnknownProblem("unknown problem '" + std::string(name) + "'");
}

const std::string& problem_name(const Problem& problem) {
  return std::visit([](const auto& p) -> const std::string& { return p.name; }, problem);
}

const std::optional<ExactSolution>& exact_solution(const Problem& problem) {
  return std::visit([](const auto& p) -> const std::optional<ExactSolution>& { return p.exact; }, problem);
}

bool is_nonlinear(const Problem& problem) { return std::holds_alternative<NonlinearProblem>(problem); }

const std::function<double(const Point&)>& source_term(const Problem& problem) {
  return std::visit([](const auto& p) -> const std::function<double(const Point&)>& { return p.source; },
                    problem);
}

PointwiseOperator apply_operator_pointwise(const Problem& problem, const Point& x, double u,
                                           const Vector2& grad) {
  if (const auto* lin = std::get_if<LinearProblem>(&problem))
    return {lin->diffusion(x) * grad, lin->convection(x).dot(grad) + lin->reaction(x) * u};
  const auto& nl = std::get<NonlinearProblem>(problem);
  return {nl.flux(x, grad), nl.lower(x, u, grad)};
}

NonlinearProblem as_nonlinear(const LinearProblem& lin, double c_lip, double c_mono) {
  NonlinearProblem p;
  p.name = lin.name;
  auto diffusion = lin.diffusion;
  auto convection = lin.convection;
  auto reaction = lin.reaction;
  p.flux = [diffusion](const Point& x, const Vector2& y) { return (diffusion(x) * y).eval(); };
  p.flux_jacobian = [diffusion](const Point& x, const Vector2&) { return diffusion(x); };
  p.flux_depends_on_x = !lin.constant_diffusion;
  if (lin.diffusion_divergence) {
    auto div = lin.diffusion_divergence;
    p.flux_divergence = [div](const Point& x, const Vector2& y) { return div(x).dot(y); };
  }
  p.lower = [convection, reaction](const Point& x, double u, const Vector2& y) {
    return convection(x).dot(y) + reaction(x) * u;
  };
  p.lower_du = [reaction](const Point& x, double, const Vector2&) { return reaction(x); };
  p.lower_dy = [convection](const Point& x, double, const Vector2&) { return convection(x); };
  p.source = lin.source;
  p.c_lip = c_lip;
  p.c_mono = c_mono;
  p.exact = lin.exact;
  return p;
}

namespace {

bool inside(const Mesh& mesh, const Point& x) {
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangle(t);
    bool in = true;
    for (int k = 0; k < 3 && in; ++k) {
      const Point& a = mesh.vertex(static_cast<std::size_t>(tri[static_cast<std::size_t>(k)]));
      const Point& b = mesh.vertex(static_cast<std::size_t>(tri[static_cast<std::size_t>((k + 1) % 3)]));
      const Point d = b - a, w = x - a;
      if (d.x() * w.y() - d.y() * w.x() < -1e-14) in = false;
    }
    if (in) return true;
  }
  return false;
}

}  // namespace

EllipticityReport check_ellipticity(const LinearProblem& problem, const Mesh& domain, int samples) {
  EllipticityReport report;
  Point lo = domain.vertex(0), hi = domain.vertex(0);
  for (const auto& p : domain.vertices()) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  double diameter = 0.0;
  for (const auto& p : domain.vertices())
    for (const auto& q : domain.vertices()) diameter = std::max(diameter, (p - q).norm());
  report.poincare_scale = diameter;

  double lambda_min = std::numeric_limits<double>::infinity();
  double b_max = 0.0;
  double negative_reaction = 0.0;
  for (int j = 0; j < samples; ++j)
    for (int i = 0; i < samples; ++i) {
      const Point x(lo.x() + (hi.x() - lo.x()) * (i + 0.5) / samples,
                    lo.y() + (hi.y() - lo.y()) * (j + 0.5) / samples);
      if (!inside(domain, x)) continue;
      const Matrix2 a = problem.diffusion(x);
      if (std::abs(a(0, 1) - a(1, 0)) > 1e-12 * a.norm()) report.symmetric_diffusion = false;
      lambda_min = std::min(lambda_min, Eigen::SelfAdjointEigenSolver<Matrix2>(a, Eigen::EigenvaluesOnly)
                                            .eigenvalues()
                                            .minCoeff());
      double c = problem.reaction(x);
      if (problem.convection_divergence) {
        c -= 0.5 * problem.convection_divergence(x);
      } else {
        b_max = std::max(b_max, problem.convection(x).norm());
      }
      negative_reaction = std::max(negative_reaction, -c);
    }
  report.margin = lambda_min - diameter * b_max - diameter * diameter * negative_reaction;
  return report;
}

MonotonicityReport sample_monotonicity(const NonlinearProblem& problem, std::uint64_t seed, int pairs,
                                       double scale) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> comp(-scale, scale);
  MonotonicityReport r;
  r.min_ratio = std::numeric_limits<double>::infinity();
  for (int i = 0; i < pairs; ++i) {
    const Point x(unit(rng), unit(rng));
    const Vector2 y(comp(rng), comp(rng));
    const Vector2 z(comp(rng), comp(rng));
    const Vector2 d = y - z;
    const double d2 = d.squaredNorm();
    if (d2 == 0.0) continue;
    const Vector2 fd = problem.flux(x, y) - problem.flux(x, z);
    r.min_ratio = std::min(r.min_ratio, fd.dot(d) / d2);
    r.max_ratio = std::max(r.max_ratio, fd.norm() / std::sqrt(d2));
  }
  return r;
}

}  // namespace afem
