#pragma once

#include "afem/genealogy.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <utility>
#include <vector>

namespace afem {

/// Marker for homogeneous Dirichlet boundary edges, the only kind supported.
inline constexpr int kDirichlet = 1;

struct BoundaryEdge {
  int a = 0;
  int b = 0;
  int marker = kDirichlet;
};

/// Local vertex indices.  Slot 0 is the vertex opposite the reference edge.
using Triangle = std::array<int, 3>;

/// Bookkeeping of one call to refine_nvb.
struct RefinementRecord {
  std::vector<std::size_t> marked;                 ///< sorted, unique
  std::vector<std::size_t> refined;                ///< sorted; includes closure
  std::vector<std::vector<std::size_t>> sons;      ///< parallel to `refined`
  std::size_t elements_before = 0;
  std::size_t elements_after = 0;
};

/// Conforming triangulation of a polygonal domain, immutable after
/// construction.  Every mesh keeps a handle to the genealogy of its initial
/// mesh so that overlays and prolongations can be computed exactly.
class Mesh {
public:
  std::size_t num_vertices() const noexcept { return coords_.size(); }
  std::size_t num_triangles() const noexcept { return triangles_.size(); }
  std::size_t num_edges() const noexcept { return edges_.size(); }

  std::span<const Point> vertices() const noexcept { return coords_; }
  const Point& vertex(std::size_t v) const { return coords_[v]; }
  std::span<const Triangle> triangles() const noexcept { return triangles_; }
  const Triangle& triangle(std::size_t t) const { return triangles_[t]; }
  std::span<const BoundaryEdge> boundary_edges() const noexcept { return boundary_; }
  bool is_boundary_vertex(std::size_t v) const { return boundary_vertex_[v] != 0; }

  int generation(std::size_t t) const { return generation_[t]; }
  std::int32_t node(std::size_t t) const { return nodes_[t]; }
  std::span<const std::int32_t> nodes() const noexcept { return nodes_; }
  std::int32_t global_vertex(std::size_t v) const { return vertex_ids_[v]; }
  std::span<const std::int32_t> global_vertices() const noexcept { return vertex_ids_; }

  /// Edge opposite local vertex `k` of triangle `t`; k = 0 is the reference edge.
  int triangle_edge(std::size_t t, int k) const { return triangle_edges_[t][static_cast<std::size_t>(k)]; }
  const std::array<int, 2>& edge(std::size_t e) const { return edges_[e]; }
  /// Triangles sharing edge `e`; the second entry is -1 on the boundary.
  const std::array<int, 2>& edge_triangles(std::size_t e) const { return edge_triangles_[e]; }
  /// Index of the edge (a,b), or -1.
  int find_edge(int a, int b) const;

  double area(std::size_t t) const;
  double diameter(std::size_t t) const;

  /// Unique per constructed mesh; copies share it.
  std::uint64_t id() const noexcept { return id_; }
  const std::shared_ptr<Genealogy>& genealogy() const noexcept { return genealogy_; }
  std::size_t initial_element_count() const noexcept { return genealogy_->initial_element_count(); }

  /// Leaves `nodes` of `genealogy` as a mesh.  Vertices listed in
  /// `vertex_order` come first, in that order; the rest follow by ascending
  /// global id.  The boundary is the set of edges with one neighbour.
  static Mesh from_nodes(std::shared_ptr<Genealogy> genealogy, std::vector<std::int32_t> nodes,
                         std::span<const std::int32_t> vertex_order = {});

private:
  Mesh() = default;
  void build_edges();

  std::shared_ptr<Genealogy> genealogy_;
  std::uint64_t id_ = 0;
  std::vector<Point> coords_;
  std::vector<std::int32_t> vertex_ids_;
  std::vector<Triangle> triangles_;
  std::vector<std::int32_t> nodes_;
  std::vector<int> generation_;
  std::vector<BoundaryEdge> boundary_;
  std::vector<char> boundary_vertex_;

  std::vector<std::array<int, 2>> edges_;  // sorted by (min, max)
  std::vector<std::array<int, 2>> edge_triangles_;
  std::vector<std::array<int, 3>> triangle_edges_;
};

/// Builds the initial mesh.  Reference edges are the longest edges, ties
/// broken by the smallest index of the opposite vertex.  Clockwise triangles
/// are reoriented.  `boundary` must list exactly the boundary edges, all
/// Dirichlet.
///
/// Throws IndexOutOfRange, DegenerateTriangle, NonConformingMesh or
/// InconsistentBoundary.
Mesh load_initial_mesh(std::span<const Point> vertices, std::span<const Triangle> triangles,
                       std::span<const BoundaryEdge> boundary);

/// Same validation, but reference edges are given explicitly as the local
/// slot of the opposite vertex (0, 1 or 2).
Mesh load_initial_mesh(std::span<const Point> vertices, std::span<const Triangle> triangles,
                       std::span<const int> reference_slots, std::span<const BoundaryEdge> boundary);

/// Edges of `triangles` with exactly one neighbour, marked Dirichlet.
std::vector<BoundaryEdge> detect_boundary(std::span<const Triangle> triangles);

/// One newest vertex bisection of every marked element plus the closure
/// needed to restore conformity.
std::pair<Mesh, RefinementRecord> refine_nvb(const Mesh& mesh, std::span<const std::size_t> marked);

/// `times` rounds of refine_nvb with every element marked.
Mesh refine_uniform(const Mesh& mesh, int times = 1);

/// Coarsest common refinement of two meshes of the same family.
Mesh overlay(const Mesh& a, const Mesh& b);

/// True when every element of `fine` lies inside an element of `coarse`.
bool refines(const Mesh& fine, const Mesh& coarse);

/// Indices of elements of `coarse` that are not elements of `fine`.
std::vector<std::size_t> refined_elements(const Mesh& coarse, const Mesh& fine);

/// Same family and same element set, in the same order.
bool identical(const Mesh& a, const Mesh& b);

/// Smallest gamma with gamma^-1 |T|^(1/2) <= diam(T) <= gamma |T|^(1/2) on every element.
double shape_regularity(const Mesh& mesh);

/// Smallest C with #T_l - #T_0 <= C * sum_{j<l} #M_j along the records of one run.
double closure_audit(std::span<const RefinementRecord> records);

struct ConformityAudit {
  bool edge_incidence = true;   ///< every edge has one or two neighbours
  bool positive_areas = true;
  bool no_hanging_nodes = true; ///< single-neighbour edges cover exactly the initial boundary
  bool area_preserved = true;
  bool ok() const noexcept { return edge_incidence && positive_areas && no_hanging_nodes && area_preserved; }
};

ConformityAudit audit_conformity(const Mesh& mesh);

}  // namespace afem
