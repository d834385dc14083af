#pragma once

// Helpers shared by the test programs: Gauss-Legendre rules for reference
// integrals and smooth separable test functions.

#include "afem/problem.hpp"

#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

namespace testing {

struct Rule {
  std::vector<double> x, w;
};

/// n-point Gauss-Legendre rule on [a, b].
inline Rule gauss(int n, double a, double b) {
  Rule r;
  for (int i = 1; i <= n; ++i) {
    double x = std::cos(std::numbers::pi * (i - 0.25) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      const double p = std::legendre(n, x);
      dp = n * (x * p - std::legendre(n - 1, x)) / (x * x - 1.0);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    dp = n * (x * std::legendre(n, x) - std::legendre(n - 1, x)) / (x * x - 1.0);
    r.x.push_back(0.5 * (a + b) + 0.5 * (b - a) * x);
    r.w.push_back((b - a) / ((1.0 - x * x) * dp * dp));
  }
  return r;
}

/// Polynomial in one variable, coefficients by ascending degree.
struct Poly {
  std::vector<double> c;
  double operator()(double x) const {
    double v = 0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * x + *it;
    return v;
  }
  Poly derivative() const {
    Poly d;
    for (std::size_t k = 1; k < c.size(); ++k) d.c.push_back(double(k) * c[k]);
    if (d.c.empty()) d.c.push_back(0.0);
    return d;
  }
  Poly operator*(const Poly& o) const {
    Poly p;
    p.c.assign(c.size() + o.c.size() - 1, 0.0);
    for (std::size_t i = 0; i < c.size(); ++i)
      for (std::size_t j = 0; j < o.c.size(); ++j) p.c[i + j] += c[i] * o.c[j];
    return p;
  }
};

/// v(x, y) = X(x) Y(y).
struct Separable {
  Poly X, Y;
  double value(const afem::Point& p) const { return X(p.x()) * Y(p.y()); }
  afem::Vector2 gradient(const afem::Point& p) const {
    return {X.derivative()(p.x()) * Y(p.y()), X(p.x()) * Y.derivative()(p.y())};
  }
};

// Weak residual  int flux(u).grad v + reaction(u) v - f v  and the matching
// absolute scale, both by reference quadrature supplied as (point, weight)
// pairs.
template <class Points>
inline std::pair<double, double> weak_residual(const afem::Problem& problem, const Separable& v, const Points& points) {
  const auto& exact = *afem::exact_solution(problem);
  const auto& f = afem::source_term(problem);
  double res = 0, scale = 0;
  for (const auto& [x, w] : points) {
    const auto op = afem::apply_operator_pointwise(problem, x, exact.value(x), exact.gradient(x));
    const double a = op.flux.dot(v.gradient(x)) + op.reaction * v.value(x);
    const double b = f(x) * v.value(x);
    res += w * (a - b);
    scale += w * (std::abs(a) + std::abs(b));
  }
  return {res, scale};
}

inline std::vector<std::pair<afem::Point, double>> square_points(int n) {
  const auto g = gauss(n, 0.0, 1.0);
  std::vector<std::pair<afem::Point, double>> pts;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) pts.push_back({afem::Point(g.x[i], g.x[j]), g.w[i] * g.w[j]});
  return pts;
}

// Sector r < 3/4, 0 < phi < 3 pi / 2, where the L-shape benchmark lives.
// r = t^3 on the inner disc absorbs the r^(-1/3) gradient singularity; the
// cutoff is smooth on each radial piece.
inline std::vector<std::pair<afem::Point, double>> lshape_points(int n) {
  std::vector<std::pair<afem::Point, double>> pts;
  const auto phis = gauss(n, 0.0, 1.5 * std::numbers::pi);
  auto add = [&](double r, double dr) {
    for (int k = 0; k < n; ++k)
      pts.push_back({afem::Point(r * std::cos(phis.x[k]), r * std::sin(phis.x[k])), phis.w[k] * r * dr});
  };
  const auto inner = gauss(n, 0.0, std::cbrt(0.25));
  for (int i = 0; i < n; ++i) add(std::pow(inner.x[i], 3), inner.w[i] * 3 * inner.x[i] * inner.x[i]);
  for (const auto& [a, b] : {std::pair{0.25, 0.5}, std::pair{0.5, 0.75}}) {
    const auto ring = gauss(n, a, b);
    for (int i = 0; i < n; ++i) add(ring.x[i], ring.w[i]);
  }
  return pts;
}

}  // namespace testing
