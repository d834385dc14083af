#include "afem/quadrature.hpp"

#include <cmath>

namespace afem {

const std::array<TriangleQuadPoint, 7>& triangle_rule7() {
  static const std::array<TriangleQuadPoint, 7> rule = [] {
    const double s15 = std::sqrt(15.0);
    const double a1 = (6.0 - s15) / 21.0, w1 = (155.0 - s15) / 1200.0;
    const double a2 = (6.0 + s15) / 21.0, w2 = (155.0 + s15) / 1200.0;
    const double b1 = 1.0 - 2.0 * a1, b2 = 1.0 - 2.0 * a2;
    return std::array<TriangleQuadPoint, 7>{{
        {{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, 9.0 / 40.0},
        {{a1, a1, b1}, w1},
        {{a1, b1, a1}, w1},
        {{b1, a1, a1}, w1},
        {{a2, a2, b2}, w2},
        {{a2, b2, a2}, w2},
        {{b2, a2, a2}, w2},
    }};
  }();
  return rule;
}

const std::array<EdgeQuadPoint, 3>& edge_rule3() {
  static const std::array<EdgeQuadPoint, 3> rule = [] {
    const double d = 0.5 * std::sqrt(0.6);
    return std::array<EdgeQuadPoint, 3>{{{0.5 - d, 5.0 / 18.0}, {0.5, 8.0 / 18.0}, {0.5 + d, 5.0 / 18.0}}};
  }();
  return rule;
}

}  // namespace afem
