#include "afem/assembly.hpp"
#include "afem/errors.hpp"
#include "afem/problem.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace afem;

namespace {

const double pi = std::numbers::pi;

LinearProblem poisson(std::function<double(const Point&)> f) {
  LinearProblem p;
  p.name = "poisson";
  p.diffusion = [](const Point&) { return Matrix2::Identity().eval(); };
  p.convection = [](const Point&) { return Vector2::Zero().eval(); };
  p.reaction = [](const Point&) { return 0.0; };
  p.source = std::move(f);
  p.constant_diffusion = true;
  return p;
}

// Unit square split into four triangles around its centre.
Mesh cross_mesh() {
  const std::vector<Point> v{{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 0.5}};
  const std::vector<Triangle> t{{4, 0, 1}, {4, 1, 2}, {4, 2, 3}, {4, 3, 0}};
  return load_initial_mesh(v, t, detect_boundary(t));
}

// Gradient of the hat of local vertex k, from the coordinates alone.
Vector2 hat_gradient(const Mesh& m, std::size_t t, int k) {
  const auto& tri = m.triangle(t);
  const Point& a = m.vertex(tri[k]);
  const Point& b = m.vertex(tri[(k + 1) % 3]);
  const Point& c = m.vertex(tri[(k + 2) % 3]);
  // phi = ((x - b) x (c - b)) / ((a - b) x (c - b))
  const Vector2 e = c - b;
  const double denom = (a - b).x() * e.y() - (a - b).y() * e.x();
  return Vector2(e.y(), -e.x()) / denom;
}

DiscreteSolution random_solution(const Mesh& m, std::mt19937& rng) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  auto s = zero_solution(m);
  for (std::size_t v = 0; v < m.num_vertices(); ++v)
    if (!m.is_boundary_vertex(v)) s.values[Eigen::Index(v)] = U(rng);
  return s;
}

Mesh random_refinement(Mesh m, std::mt19937& rng, int rounds) {
  for (int k = 0; k < rounds; ++k) {
    std::vector<std::size_t> marked;
    for (std::size_t t = 0; t < m.num_triangles(); ++t)
      if (rng() % 4 == 0) marked.push_back(t);
    m = refine_nvb(m, marked).first;
  }
  return m;
}

}  // namespace

TEST_CASE("a mesh without interior vertices gives an empty system") {
  const auto m = unit_square_mesh(1);
  const auto sys = assemble_linear(m, poisson([](const Point&) { return 1.0; }));
  CHECK(sys.dofs.size() == 0);
  const auto u = solve_linear(sys);
  CHECK(u.values.size() == 4);
  CHECK(u.values.isZero(0.0));
}

TEST_CASE("the cross mesh gives a one by one system") {
  // Right angles at the centre: each triangle adds (cot 45 + cot 45)/2 = 1 to
  // the diagonal and |T|/3 = 1/12 to the load, so U = (1/3) / 4.
  const auto m = cross_mesh();
  const auto sys = assemble_linear(m, poisson([](const Point&) { return 1.0; }));
  REQUIRE(sys.dofs.size() == 1);
  CHECK(sys.matrix.coeff(0, 0) == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(sys.rhs[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  const auto u = solve_linear(sys);
  CHECK(u.values[4] == doctest::Approx(1.0 / 12.0).epsilon(1e-14));
}

TEST_CASE("constants lie in the kernel of the stiffness matrix") {
  const auto m = unit_square_mesh(6);
  const auto sys = assemble_linear(m, poisson([](const Point&) { return 0.0; }));
  for (Eigen::Index i = 0; i < sys.matrix.rows(); ++i) {
    const int v = sys.dofs.vertex_of_dof[std::size_t(i)];
    bool inner = true;
    for (std::size_t t = 0; t < m.num_triangles(); ++t) {
      const auto& tri = m.triangle(t);
      if (std::find(tri.begin(), tri.end(), v) == tri.end()) continue;
      for (int w : tri) inner = inner && !m.is_boundary_vertex(std::size_t(w));
    }
    if (inner) CHECK(std::abs(sys.matrix.row(i).sum()) <= 1e-13);
  }
}

TEST_CASE("pattern is structurally symmetric and the diagonal is nonzero") {
  const auto cd = std::get<LinearProblem>(builtin_problem("convection_diffusion"));
  const auto sys = assemble_linear(refine_uniform(unit_square_mesh(2), 3), cd);
  const SparseMatrix t = sys.matrix.transpose();
  for (Eigen::Index i = 0; i < sys.matrix.rows(); ++i) {
    CHECK(sys.matrix.coeff(i, i) != 0.0);
    for (SparseMatrix::InnerIterator it(sys.matrix, i); it; ++it) CHECK(t.coeff(i, it.col()) != 0.0);
  }
  CHECK_FALSE(sys.matrix.isApprox(t));
}

TEST_CASE("pure convection matches the hand-integrated element terms") {
  // b(phi_j, phi_i) = sum_T d_x phi_j |_T * |T| / 3 over elements holding both.
  LinearProblem p = poisson([](const Point&) { return 0.0; });
  p.diffusion = [](const Point&) { return Matrix2::Zero().eval(); };
  p.convection = [](const Point&) { return Vector2(1.0, 0.0); };
  std::mt19937 rng(1);
  const auto m = random_refinement(unit_square_mesh(3), rng, 3);
  const auto sys = assemble_linear(m, p);
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(Eigen::Index(sys.dofs.size()), Eigen::Index(sys.dofs.size()));
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    const auto& tri = m.triangle(t);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        const int i = sys.dofs.dof_of_vertex[std::size_t(tri[a])];
        const int j = sys.dofs.dof_of_vertex[std::size_t(tri[b])];
        if (i < 0 || j < 0) continue;
        expected(i, j) += hat_gradient(m, t, b).x() * m.area(t) / 3.0;
      }
  }
  CHECK((Eigen::MatrixXd(sys.matrix) - expected).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("zero load gives the zero solution") {
  const auto m = refine_uniform(unit_square_mesh(2), 2);
  const auto u = solve_linear(assemble_linear(m, poisson([](const Point&) { return 0.0; })));
  CHECK(u.values.isZero(0.0));
}

TEST_CASE("square_smooth nodal error drops about four times per halving of h") {
  const auto p = std::get<LinearProblem>(builtin_problem("square_smooth"));
  auto nodal_error = [&](const Mesh& m) {
    const auto u = solve_linear(assemble_linear(m, p));
    double e = 0;
    for (std::size_t v = 0; v < m.num_vertices(); ++v)
      e = std::max(e, std::abs(u.values[Eigen::Index(v)] - p.exact->value(m.vertex(v))));
    return e;
  };
  const double coarse = nodal_error(unit_square_mesh(8));
  const double fine = nodal_error(unit_square_mesh(16));
  CHECK(coarse / fine > 3.0);
  CHECK(coarse / fine < 5.0);
}

TEST_CASE("assembly does not depend on the thread count") {
  const auto cd = std::get<LinearProblem>(builtin_problem("convection_diffusion"));
  std::mt19937 rng(2);
  const auto m = random_refinement(unit_square_mesh(4), rng, 5);
  const auto a = assemble_linear(m, cd, {1});
  const auto b = assemble_linear(m, cd, {4});
  CHECK(Eigen::MatrixXd(a.matrix) == Eigen::MatrixXd(b.matrix));
  CHECK(a.rhs == b.rhs);
}

TEST_CASE("non-finite coefficients are reported") {
  auto p = poisson([](const Point&) { return std::nan(""); });
  CHECK_THROWS_AS(assemble_linear(unit_square_mesh(2), p), QuadratureError);
}

TEST_CASE("large systems take the iterative path and still meet the residual target") {
  const auto m = refine_uniform(unit_square_mesh(2), 16);
  const auto cd = std::get<LinearProblem>(builtin_problem("convection_diffusion"));
  const auto sys = assemble_linear(m, cd, {4});
  REQUIRE(sys.dofs.size() > 200000);
  const auto x = solve_sparse(sys.matrix, sys.rhs);
  CHECK((sys.rhs - sys.matrix * x).norm() <= 1e-10 * sys.rhs.norm());

  const auto sq = std::get<LinearProblem>(builtin_problem("square_smooth"));
  const auto ss = assemble_linear(m, sq, {4});
  const auto y = solve_sparse(ss.matrix, ss.rhs);
  CHECK((ss.rhs - ss.matrix * y).norm() <= 1e-10 * ss.rhs.norm());
}

TEST_CASE("prolongation is exact") {
  std::mt19937 rng(4);
  const auto coarse = random_refinement(lshape_mesh(), rng, 3);
  const auto mid = random_refinement(coarse, rng, 2);
  const auto fine = random_refinement(mid, rng, 2);
  const auto u = random_solution(coarse, rng);

  const auto direct = transfer(coarse, u, fine);
  const auto chained = transfer(mid, transfer(coarse, u, mid), fine);
  CHECK((direct.values - chained.values).cwiseAbs().maxCoeff() <= 1e-15);

  std::uniform_real_distribution<double> X(-1.0, 1.0);
  int checked = 0;
  while (checked < 50) {
    const Point x(X(rng), X(rng));
    if (x.x() > 0 && x.y() < 0) continue;
    CHECK(std::abs(evaluate(fine, direct, x) - evaluate(coarse, u, x)) <= 1e-14);
    ++checked;
  }
  CHECK(transfer(coarse, zero_solution(coarse), fine).values.isZero(0.0));
  CHECK_THROWS_AS(transfer(fine, transfer(coarse, u, fine), coarse), GenealogyMismatch);
  CHECK_THROWS_AS(transfer(fine, u, fine), MeshMismatch);
}

TEST_CASE("energy products") {
  std::mt19937 rng(6);
  const auto m = random_refinement(unit_square_mesh(3), rng, 3);
  const auto w = random_solution(m, rng);
  const auto v = random_solution(m, rng);

  const Problem plain = poisson([](const Point&) { return 0.0; });
  CHECK(energy_products(m, plain, v, v).dl_sq == 0.0);
  CHECK(energy_products(m, plain, w, v).dl_sq == doctest::Approx(grad_distance_sq(m, w, v)).epsilon(1e-13));

  // b(w, v) through the assembled matrix.
  const auto cd = builtin_problem("convection_diffusion");
  const auto sys = assemble_linear(m, std::get<LinearProblem>(cd));
  const auto wi = restrict_to_dofs(sys.dofs, w), vi = restrict_to_dofs(sys.dofs, v);
  CHECK(*energy_products(m, cd, w, v).b_wv == doctest::Approx(vi.dot(sys.matrix * wi)).epsilon(1e-12));

  CHECK_THROWS_AS(energy_products(unit_square_mesh(3), plain, w, v), MeshMismatch);
}

TEST_CASE("quasi-metric of the magnetostatic law stays in the monotonicity band") {
  const auto mag = builtin_problem("magnetostatics_nl");
  const auto& nl = std::get<NonlinearProblem>(mag);
  std::mt19937 rng(8);
  const auto m = random_refinement(unit_square_mesh(4), rng, 3);
  for (int k = 0; k < 100; ++k) {
    auto w = random_solution(m, rng), v = random_solution(m, rng);
    w.values *= double(k % 7);
    const double g = grad_distance_sq(m, w, v);
    const double dl = energy_products(m, mag, w, v).dl_sq;
    CHECK(dl >= nl.c_mono * g * (1 - 1e-12));
    CHECK(dl <= 2.0 * nl.c_lip * g);
  }
}

TEST_CASE("Galerkin orthogonality against a refined reference") {
  // f = 1 is integrated exactly on every mesh, so the coarse Galerkin
  // equations hold exactly for the reference solution.
  const auto cd = std::get<LinearProblem>(builtin_problem("convection_diffusion"));
  std::mt19937 rng(10);
  const auto coarse = random_refinement(unit_square_mesh(2), rng, 4);
  const auto fine = refine_uniform(coarse, 3);
  const auto uc = solve_linear(assemble_linear(coarse, cd));
  const auto fs = assemble_linear(fine, cd);
  const auto uf = solve_linear(fs);
  const Eigen::VectorXd e = restrict_to_dofs(fs.dofs, uf) - restrict_to_dofs(fs.dofs, transfer(coarse, uc, fine));
  const Eigen::VectorXd r = fs.matrix * e;
  const auto cdofs = make_dof_map(coarse);
  for (std::size_t i = 0; i < cdofs.size(); ++i) {
    auto hat = zero_solution(coarse);
    hat.values[cdofs.vertex_of_dof[i]] = 1.0;
    const auto h = restrict_to_dofs(fs.dofs, transfer(coarse, hat, fine));
    CHECK(std::abs(h.dot(r)) <= 1e-8);
  }
}

TEST_CASE("Cea bound with the nodal interpolant") {
  // C_cont / C_ell <= 1 + |b| C_P + c C_P^2 with C_P = 1 / (pi sqrt 2) on the
  // unit square; the skew convection part does not affect coercivity.
  const auto cd = std::get<LinearProblem>(builtin_problem("convection_diffusion"));
  const double cp = 1.0 / (pi * std::sqrt(2.0));
  const double bound = 1.0 + std::hypot(3.0, 2.5) * cp + cp * cp;
  std::mt19937 rng(12);
  auto coarse = unit_square_mesh(2);
  for (int level = 0; level < 4; ++level) {
    coarse = random_refinement(coarse, rng, 2);
    const auto fine = refine_uniform(coarse, 3);
    const auto uc = transfer(coarse, solve_linear(assemble_linear(coarse, cd)), fine);
    const auto uf = solve_linear(assemble_linear(fine, cd));
    auto nodal = zero_solution(coarse);
    for (std::size_t v = 0; v < coarse.num_vertices(); ++v)
      if (!coarse.is_boundary_vertex(v)) nodal.values[Eigen::Index(v)] = evaluate(fine, uf, coarse.vertex(v));
    const auto interp = transfer(coarse, nodal, fine);
    CHECK(std::sqrt(grad_distance_sq(fine, uf, uc)) <= bound * std::sqrt(grad_distance_sq(fine, uf, interp)));
  }
}

TEST_CASE("interpolation, H1 error and point location") {
  const auto m = refine_uniform(unit_square_mesh(2), 2);
  ExactSolution lin{[](const Point& x) { return 2 * x.x() - x.y(); }, [](const Point&) { return Vector2(2, -1); }};
  CHECK(h1_error_sq(m, zero_solution(m), lin) == doctest::Approx(5.0).epsilon(1e-14));
  const auto s = interpolate(m, lin.value);
  for (std::size_t v = 0; v < m.num_vertices(); ++v)
    CHECK(s.values[Eigen::Index(v)] == (m.is_boundary_vertex(v) ? 0.0 : lin.value(m.vertex(v))));
  CHECK(locate(m, Point(0.3, 0.6)).has_value());
  CHECK_FALSE(locate(m, Point(1.5, 0.5)).has_value());
}

TEST_CASE("solutions serialise as a count followed by values") {
  const auto m = cross_mesh();
  const auto u = solve_linear(assemble_linear(m, poisson([](const Point&) { return 1.0; })));
  std::ostringstream out;
  write_solution(out, u);
  std::istringstream in(out.str());
  std::size_t n = 0;
  in >> n;
  CHECK(n == 5);
  std::vector<double> vals(n);
  for (auto& v : vals) in >> v;
  CHECK(vals[4] == u.values[4]);
}
