#pragma once

#include <array>

namespace afem {

/// Point of a rule on the reference triangle in barycentric coordinates;
/// weights sum to one (multiply by |T|).
struct TriangleQuadPoint {
  std::array<double, 3> lambda;
  double weight;
};

/// Symmetric 7-point rule, exact for polynomials of degree 5.
const std::array<TriangleQuadPoint, 7>& triangle_rule7();

/// Point of a rule on [0,1]; weights sum to one (multiply by |E|).
struct EdgeQuadPoint {
  double t;
  double weight;
};

/// 3-point Gauss-Legendre rule, exact for degree 5.
const std::array<EdgeQuadPoint, 3>& edge_rule3();

}  // namespace afem
