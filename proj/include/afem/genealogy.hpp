#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <mutex>
#include <unordered_map>
#include <utility>
#include <vector>

namespace afem {

using Point = Eigen::Vector2d;

/// Shared ancestry of every mesh obtained from one initial triangulation by
/// newest vertex bisection.
///
/// Triangles are nodes of a binary forest whose roots are the initial
/// triangles; vertices get a global id the first time they are created.
/// Bisecting the same node twice returns the same sons, and the midpoint
/// of an edge is created once, so ids are canonical across all meshes of
/// the family.  This is what makes overlay and solution transfer exact
/// integer operations.
class Genealogy {
public:
  struct Node {
    /// Global vertex ids; slot 0 is the newest vertex and (1,2) the
    /// reference edge.
    std::array<std::int32_t, 3> vertices;
    std::int32_t parent = -1;
    std::array<std::int32_t, 2> sons{-1, -1};
    std::int32_t root = -1;
    std::int32_t generation = 0;
  };

  /// Unsynchronized view of the ledger.  Only valid while the lock taken
  /// by `access()` is held.
  class Ledger {
  public:
    std::size_t vertex_count() const { return vertices_.size(); }
    std::size_t node_count() const { return nodes_.size(); }
    std::size_t root_count() const { return root_count_; }
    const Point& vertex(std::int32_t id) const { return vertices_[static_cast<std::size_t>(id)]; }
    /// Endpoints of the edge a vertex bisects; {-1,-1} for initial vertices.
    const std::array<std::int32_t, 2>& vertex_parents(std::int32_t id) const {
      return vertex_parents_[static_cast<std::size_t>(id)];
    }
    const Node& node(std::int32_t id) const { return nodes_[static_cast<std::size_t>(id)]; }

    /// Sons of `id`, creating them (and the midpoint) on first request.
    std::array<std::int32_t, 2> bisect(std::int32_t id);
    /// Midpoint vertex of the edge (a,b), creating it on first request.
    std::int32_t midpoint(std::int32_t a, std::int32_t b);

  private:
    friend class Genealogy;
    std::vector<Point> vertices_;
    std::vector<std::array<std::int32_t, 2>> vertex_parents_;
    std::vector<Node> nodes_;
    std::unordered_map<std::uint64_t, std::int32_t> midpoints_;
    std::size_t root_count_ = 0;
  };

  /// `roots` must already be normalized (slot 0 opposite the reference edge,
  /// counter-clockwise).
  Genealogy(std::vector<Point> vertices, const std::vector<std::array<std::int32_t, 3>>& roots,
            double perimeter, double area);

  Genealogy(const Genealogy&) = delete;
  Genealogy& operator=(const Genealogy&) = delete;

  template <class F>
  decltype(auto) access(F&& f) {
    std::lock_guard<std::mutex> lock(mutex_);
    return f(ledger_);
  }
  template <class F>
  decltype(auto) access(F&& f) const {
    std::lock_guard<std::mutex> lock(mutex_);
    return f(static_cast<const Ledger&>(ledger_));
  }

  double initial_perimeter() const noexcept { return perimeter_; }
  double initial_area() const noexcept { return area_; }
  std::size_t initial_element_count() const noexcept { return root_count_; }

private:
  mutable std::mutex mutex_;
  Ledger ledger_;
  double perimeter_;
  double area_;
  std::size_t root_count_;
};

}  // namespace afem
