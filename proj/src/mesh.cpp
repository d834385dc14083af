#include "afem/mesh.hpp"

#include "afem/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

namespace afem {

namespace {

std::atomic<std::uint64_t> next_mesh_id{1};

std::uint64_t edge_key(int a, int b) {
  const auto lo = static_cast<std::uint64_t>(static_cast<std::uint32_t>(std::min(a, b)));
  const auto hi = static_cast<std::uint64_t>(static_cast<std::uint32_t>(std::max(a, b)));
  return (lo << 32) | hi;
}

double cross(const Point& u, const Point& v) { return u.x() * v.y() - u.y() * v.x(); }

double signed_area(const Point& p0, const Point& p1, const Point& p2) {
  return 0.5 * cross(p1 - p0, p2 - p0);
}

int longest_edge_slot(std::span<const Point> vertices, const Triangle& t) {
  int best = 0;
  double best_len = -1.0;
  for (int k = 0; k < 3; ++k) {
    const auto& a = vertices[static_cast<std::size_t>(t[static_cast<std::size_t>((k + 1) % 3)])];
    const auto& b = vertices[static_cast<std::size_t>(t[static_cast<std::size_t>((k + 2) % 3)])];
    const double len = (a - b).squaredNorm();
    const double tol = 1e-12 * std::max(len, best_len);
    if (len > best_len + tol) {
      best = k;
      best_len = len;
    } else if (std::abs(len - best_len) <= tol && t[static_cast<std::size_t>(k)] < t[static_cast<std::size_t>(best)]) {
      best = k;
    }
  }
  return best;
}

// Edges with one neighbour, oriented counter-clockwise, keyed for lookup.
std::vector<std::pair<std::uint64_t, BoundaryEdge>> single_edges(std::span<const Triangle> triangles) {
  std::vector<std::pair<std::uint64_t, BoundaryEdge>> half;
  half.reserve(3 * triangles.size());
  for (const auto& t : triangles) {
    for (int k = 0; k < 3; ++k) {
      const int a = t[static_cast<std::size_t>((k + 1) % 3)];
      const int b = t[static_cast<std::size_t>((k + 2) % 3)];
      half.push_back({edge_key(a, b), BoundaryEdge{a, b, kDirichlet}});
    }
  }
  std::sort(half.begin(), half.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });
  std::vector<std::pair<std::uint64_t, BoundaryEdge>> out;
  for (std::size_t i = 0; i < half.size();) {
    std::size_t j = i;
    while (j < half.size() && half[j].first == half[i].first) ++j;
    if (j - i > 2) throw NonConformingMesh("edge shared by more than two triangles");
    if (j - i == 1) out.push_back(half[i]);
    i = j;
  }
  return out;
}

Mesh build_initial(std::span<const Point> vertices, std::span<const Triangle> triangles,
                   std::span<const int> reference_slots, std::span<const BoundaryEdge> boundary) {
  const auto nv = vertices.size();
  if (triangles.empty()) throw NonConformingMesh("mesh has no triangles");

  std::vector<std::array<std::int32_t, 3>> roots;
  roots.reserve(triangles.size());
  std::vector<Triangle> normalized;
  normalized.reserve(triangles.size());
  double area = 0.0;
  std::vector<char> used(nv, 0);

  for (std::size_t i = 0; i < triangles.size(); ++i) {
    const auto& t = triangles[i];
    for (int v : t) {
      if (v < 0 || static_cast<std::size_t>(v) >= nv)
        throw IndexOutOfRange("triangle " + std::to_string(i) + " references vertex " + std::to_string(v));
      used[static_cast<std::size_t>(v)] = 1;
    }
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2])
      throw DegenerateTriangle("triangle " + std::to_string(i) + " repeats a vertex");
    const auto& p0 = vertices[static_cast<std::size_t>(t[0])];
    const auto& p1 = vertices[static_cast<std::size_t>(t[1])];
    const auto& p2 = vertices[static_cast<std::size_t>(t[2])];
    const double scale = std::max({(p1 - p0).squaredNorm(), (p2 - p1).squaredNorm(), (p0 - p2).squaredNorm()});
    const double a = signed_area(p0, p1, p2);
    if (!(std::abs(a) > 1e-14 * scale))
      throw DegenerateTriangle("triangle " + std::to_string(i) + " has zero area");

    int slot = 0;
    if (reference_slots.empty()) {
      slot = longest_edge_slot(vertices, t);
    } else {
      slot = reference_slots[i];
      if (slot < 0 || slot > 2)
        throw IndexOutOfRange("triangle " + std::to_string(i) + " has reference slot " + std::to_string(slot));
    }
    Triangle r{t[static_cast<std::size_t>(slot)], t[static_cast<std::size_t>((slot + 1) % 3)],
               t[static_cast<std::size_t>((slot + 2) % 3)]};
    if (a < 0) std::swap(r[1], r[2]);
    normalized.push_back(r);
    roots.push_back({r[0], r[1], r[2]});
    area += std::abs(a);
  }

  for (std::size_t v = 0; v < nv; ++v)
    if (!used[v]) throw NonConformingMesh("vertex " + std::to_string(v) + " belongs to no triangle");

  {
    std::vector<std::array<int, 3>> sorted(normalized.begin(), normalized.end());
    for (auto& s : sorted) std::sort(s.begin(), s.end());
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw NonConformingMesh("duplicated triangle");
  }

  const auto singles = single_edges(normalized);

  // A vertex lying inside a single-neighbour edge is a hanging node.  Such a
  // vertex always touches single-neighbour edges itself.
  {
    std::vector<int> candidates;
    for (const auto& [key, e] : singles) {
      candidates.push_back(e.a);
      candidates.push_back(e.b);
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    for (const auto& [key, e] : singles) {
      const Point& a = vertices[static_cast<std::size_t>(e.a)];
      const Point d = vertices[static_cast<std::size_t>(e.b)] - a;
      const double len2 = d.squaredNorm();
      for (int v : candidates) {
        if (v == e.a || v == e.b) continue;
        const Point w = vertices[static_cast<std::size_t>(v)] - a;
        const double s = w.dot(d) / len2;
        if (s > 1e-12 && s < 1.0 - 1e-12 && std::abs(cross(d, w)) <= 1e-12 * len2)
          throw NonConformingMesh("hanging node " + std::to_string(v));
      }
    }
  }

  std::vector<std::uint64_t> spec_keys;
  spec_keys.reserve(boundary.size());
  for (const auto& e : boundary) {
    if (e.a < 0 || e.b < 0 || static_cast<std::size_t>(e.a) >= nv || static_cast<std::size_t>(e.b) >= nv)
      throw InconsistentBoundary("boundary edge references a missing vertex");
    if (e.marker != kDirichlet)
      throw InconsistentBoundary("boundary marker " + std::to_string(e.marker) + " is not Dirichlet");
    spec_keys.push_back(edge_key(e.a, e.b));
  }
  std::sort(spec_keys.begin(), spec_keys.end());
  if (std::adjacent_find(spec_keys.begin(), spec_keys.end()) != spec_keys.end())
    throw InconsistentBoundary("boundary edge listed twice");
  std::vector<std::uint64_t> mesh_keys;
  for (const auto& [key, e] : singles) mesh_keys.push_back(key);
  if (spec_keys != mesh_keys)
    throw InconsistentBoundary("boundary edges do not match the boundary of the triangulation");

  double perimeter = 0.0;
  for (const auto& [key, e] : singles)
    perimeter += (vertices[static_cast<std::size_t>(e.a)] - vertices[static_cast<std::size_t>(e.b)]).norm();

  auto genealogy = std::make_shared<Genealogy>(std::vector<Point>(vertices.begin(), vertices.end()), roots,
                                               perimeter, area);
  std::vector<std::int32_t> nodes(triangles.size());
  std::iota(nodes.begin(), nodes.end(), 0);
  std::vector<std::int32_t> order(nv);
  std::iota(order.begin(), order.end(), 0);
  return Mesh::from_nodes(std::move(genealogy), std::move(nodes), order);
}

}  // namespace

int Mesh::find_edge(int a, int b) const {
  const int lo = std::min(a, b), hi = std::max(a, b);
  auto it = std::lower_bound(edges_.begin(), edges_.end(), std::array<int, 2>{lo, hi});
  if (it == edges_.end() || (*it)[0] != lo || (*it)[1] != hi) return -1;
  return static_cast<int>(it - edges_.begin());
}

double Mesh::area(std::size_t t) const {
  const auto& tri = triangles_[t];
  return signed_area(coords_[static_cast<std::size_t>(tri[0])], coords_[static_cast<std::size_t>(tri[1])],
                     coords_[static_cast<std::size_t>(tri[2])]);
}

double Mesh::diameter(std::size_t t) const {
  const auto& tri = triangles_[t];
  const auto& p0 = coords_[static_cast<std::size_t>(tri[0])];
  const auto& p1 = coords_[static_cast<std::size_t>(tri[1])];
  const auto& p2 = coords_[static_cast<std::size_t>(tri[2])];
  return std::sqrt(std::max({(p1 - p0).squaredNorm(), (p2 - p1).squaredNorm(), (p0 - p2).squaredNorm()}));
}

Mesh Mesh::from_nodes(std::shared_ptr<Genealogy> genealogy, std::vector<std::int32_t> nodes,
                      std::span<const std::int32_t> vertex_order) {
  Mesh m;
  m.id_ = next_mesh_id.fetch_add(1);
  m.genealogy_ = std::move(genealogy);
  m.nodes_ = std::move(nodes);

  m.genealogy_->access([&](const Genealogy::Ledger& ledger) {
    std::vector<int> local(ledger.vertex_count(), -1);
    std::vector<char> used(ledger.vertex_count(), 0);
    for (auto n : m.nodes_)
      for (auto v : ledger.node(n).vertices) used[static_cast<std::size_t>(v)] = 1;

    auto take = [&](std::int32_t gid) {
      auto g = static_cast<std::size_t>(gid);
      if (!used[g] || local[g] >= 0) return;
      local[g] = static_cast<int>(m.vertex_ids_.size());
      m.vertex_ids_.push_back(gid);
      m.coords_.push_back(ledger.vertex(gid));
    };
    for (auto gid : vertex_order) take(gid);
    for (std::size_t g = 0; g < used.size(); ++g) take(static_cast<std::int32_t>(g));

    m.triangles_.reserve(m.nodes_.size());
    m.generation_.reserve(m.nodes_.size());
    for (auto n : m.nodes_) {
      const auto& node = ledger.node(n);
      m.triangles_.push_back({local[static_cast<std::size_t>(node.vertices[0])],
                              local[static_cast<std::size_t>(node.vertices[1])],
                              local[static_cast<std::size_t>(node.vertices[2])]});
      m.generation_.push_back(node.generation);
    }
  });

  m.build_edges();
  return m;
}

void Mesh::build_edges() {
  const auto nt = triangles_.size();
  std::vector<std::pair<std::uint64_t, int>> half;
  half.reserve(3 * nt);
  for (std::size_t t = 0; t < nt; ++t)
    for (int k = 0; k < 3; ++k) {
      const int a = triangles_[t][static_cast<std::size_t>((k + 1) % 3)];
      const int b = triangles_[t][static_cast<std::size_t>((k + 2) % 3)];
      half.push_back({edge_key(a, b), static_cast<int>(3 * t) + k});
    }
  std::sort(half.begin(), half.end());

  triangle_edges_.assign(nt, {-1, -1, -1});
  edges_.clear();
  edge_triangles_.clear();
  boundary_.clear();
  boundary_vertex_.assign(coords_.size(), 0);
  for (std::size_t i = 0; i < half.size();) {
    std::size_t j = i;
    while (j < half.size() && half[j].first == half[i].first) ++j;
    if (j - i > 2) throw NonConformingMesh("edge shared by more than two triangles");
    const int e = static_cast<int>(edges_.size());
    const auto key = half[i].first;
    edges_.push_back({static_cast<int>(key >> 32), static_cast<int>(key & 0xffffffffu)});
    std::array<int, 2> tris{-1, -1};
    for (std::size_t h = i; h < j; ++h) {
      const int t = half[h].second / 3;
      const int k = half[h].second % 3;
      tris[h - i] = t;
      triangle_edges_[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)] = e;
    }
    edge_triangles_.push_back(tris);
    if (j - i == 1) {
      const int t = half[i].second / 3;
      const int k = half[i].second % 3;
      const auto& tri = triangles_[static_cast<std::size_t>(t)];
      const int a = tri[static_cast<std::size_t>((k + 1) % 3)];
      const int b = tri[static_cast<std::size_t>((k + 2) % 3)];
      boundary_.push_back({a, b, kDirichlet});
      boundary_vertex_[static_cast<std::size_t>(a)] = 1;
      boundary_vertex_[static_cast<std::size_t>(b)] = 1;
    }
    i = j;
  }
}

Mesh load_initial_mesh(std::span<const Point> vertices, std::span<const Triangle> triangles,
                       std::span<const BoundaryEdge> boundary) {
  return build_initial(vertices, triangles, {}, boundary);
}

Mesh load_initial_mesh(std::span<const Point> vertices, std::span<const Triangle> triangles,
                       std::span<const int> reference_slots, std::span<const BoundaryEdge> boundary) {
  if (reference_slots.size() != triangles.size())
    throw IndexOutOfRange("one reference slot per triangle required");
  return build_initial(vertices, triangles, reference_slots, boundary);
}

std::vector<BoundaryEdge> detect_boundary(std::span<const Triangle> triangles) {
  std::vector<BoundaryEdge> out;
  for (const auto& [key, e] : single_edges(triangles)) out.push_back(e);
  return out;
}

std::pair<Mesh, RefinementRecord> refine_nvb(const Mesh& mesh, std::span<const std::size_t> marked) {
  const auto nt = mesh.num_triangles();
  RefinementRecord record;
  record.elements_before = nt;
  record.marked.assign(marked.begin(), marked.end());
  std::sort(record.marked.begin(), record.marked.end());
  record.marked.erase(std::unique(record.marked.begin(), record.marked.end()), record.marked.end());
  if (!record.marked.empty() && record.marked.back() >= nt)
    throw IndexOutOfRange("marked element " + std::to_string(record.marked.back()) + " out of range");
  if (record.marked.empty()) {
    record.elements_after = nt;
    return {mesh, std::move(record)};
  }

  // Closure: every element with a marked edge must have its reference edge marked.
  std::vector<char> edge_marked(mesh.num_edges(), 0);
  std::vector<int> worklist;
  for (auto t : record.marked) {
    const int e = mesh.triangle_edge(t, 0);
    if (!edge_marked[static_cast<std::size_t>(e)]) {
      edge_marked[static_cast<std::size_t>(e)] = 1;
      worklist.push_back(e);
    }
  }
  const std::size_t budget = 4 * nt;
  std::size_t steps = 0;
  while (!worklist.empty()) {
    const int e = worklist.back();
    worklist.pop_back();
    for (int t : mesh.edge_triangles(static_cast<std::size_t>(e))) {
      if (t < 0) continue;
      const int r = mesh.triangle_edge(static_cast<std::size_t>(t), 0);
      if (edge_marked[static_cast<std::size_t>(r)]) continue;
      if (++steps > budget) throw Error("newest vertex bisection closure exceeded its step budget");
      edge_marked[static_cast<std::size_t>(r)] = 1;
      worklist.push_back(r);
    }
  }

  std::vector<std::int32_t> new_nodes;
  new_nodes.reserve(2 * nt);
  const auto& genealogy = mesh.genealogy();
  genealogy->access([&](Genealogy::Ledger& ledger) {
    for (std::size_t t = 0; t < nt; ++t) {
      if (!edge_marked[static_cast<std::size_t>(mesh.triangle_edge(t, 0))]) {
        new_nodes.push_back(mesh.node(t));
        continue;
      }
      const auto sons = ledger.bisect(mesh.node(t));
      std::vector<std::size_t> indices;
      // son 0 = (m, v0, v1) carries the edge opposite v2; son 1 = (m, v2, v0) the edge opposite v1.
      for (int s = 0; s < 2; ++s) {
        const int slot = s == 0 ? 2 : 1;
        if (edge_marked[static_cast<std::size_t>(mesh.triangle_edge(t, slot))]) {
          for (auto g : ledger.bisect(sons[static_cast<std::size_t>(s)])) {
            indices.push_back(new_nodes.size());
            new_nodes.push_back(g);
          }
        } else {
          indices.push_back(new_nodes.size());
          new_nodes.push_back(sons[static_cast<std::size_t>(s)]);
        }
      }
      record.refined.push_back(t);
      record.sons.push_back(std::move(indices));
    }
  });

  Mesh refined = Mesh::from_nodes(genealogy, std::move(new_nodes), mesh.global_vertices());
  record.elements_after = refined.num_triangles();
  return {std::move(refined), std::move(record)};
}

Mesh refine_uniform(const Mesh& mesh, int times) {
  Mesh current = mesh;
  for (int i = 0; i < times; ++i) {
    std::vector<std::size_t> all(current.num_triangles());
    std::iota(all.begin(), all.end(), std::size_t{0});
    current = refine_nvb(current, all).first;
  }
  return current;
}

namespace {

void require_same_family(const Mesh& a, const Mesh& b) {
  if (a.genealogy() != b.genealogy())
    throw GenealogyMismatch("meshes do not descend from a common initial mesh");
}

}  // namespace

Mesh overlay(const Mesh& a, const Mesh& b) {
  require_same_family(a, b);
  const auto& genealogy = a.genealogy();
  std::vector<std::int32_t> nodes;
  genealogy->access([&](const Genealogy::Ledger& ledger) {
    std::vector<char> in_cut(ledger.node_count(), 0);
    std::vector<char> ancestor(ledger.node_count(), 0);
    for (auto n : a.nodes()) in_cut[static_cast<std::size_t>(n)] = 1;
    for (auto n : b.nodes()) in_cut[static_cast<std::size_t>(n)] = 1;
    auto mark_ancestors = [&](std::int32_t n) {
      for (auto p = ledger.node(n).parent; p >= 0 && !ancestor[static_cast<std::size_t>(p)];
           p = ledger.node(p).parent)
        ancestor[static_cast<std::size_t>(p)] = 1;
    };
    for (auto n : a.nodes()) mark_ancestors(n);
    for (auto n : b.nodes()) mark_ancestors(n);
    // Keep the deeper leaf of every tree path: nodes of either mesh that no
    // other element of either mesh lies inside.
    std::vector<char> emitted(ledger.node_count(), 0);
    for (const Mesh* m : {&a, &b})
      for (auto n : m->nodes()) {
        const auto i = static_cast<std::size_t>(n);
        if (ancestor[i] || emitted[i]) continue;
        emitted[i] = 1;
        nodes.push_back(n);
      }
  });
  std::vector<std::int32_t> order(a.global_vertices().begin(), a.global_vertices().end());
  order.insert(order.end(), b.global_vertices().begin(), b.global_vertices().end());
  Mesh result = Mesh::from_nodes(genealogy, std::move(nodes), order);
  if (!audit_conformity(result).ok()) throw NonConformingMesh("overlay produced a non-conforming mesh");
  return result;
}

bool refines(const Mesh& fine, const Mesh& coarse) {
  if (fine.genealogy() != coarse.genealogy()) return false;
  return fine.genealogy()->access([&](const Genealogy::Ledger& ledger) {
    std::vector<char> in_coarse(ledger.node_count(), 0);
    for (auto n : coarse.nodes()) in_coarse[static_cast<std::size_t>(n)] = 1;
    for (auto n : fine.nodes()) {
      auto p = n;
      while (p >= 0 && !in_coarse[static_cast<std::size_t>(p)]) p = ledger.node(p).parent;
      if (p < 0) return false;
    }
    return true;
  });
}

std::vector<std::size_t> refined_elements(const Mesh& coarse, const Mesh& fine) {
  require_same_family(coarse, fine);
  std::vector<std::size_t> out;
  fine.genealogy()->access([&](const Genealogy::Ledger& ledger) {
    std::vector<char> in_fine(ledger.node_count(), 0);
    for (auto n : fine.nodes()) in_fine[static_cast<std::size_t>(n)] = 1;
    for (std::size_t t = 0; t < coarse.num_triangles(); ++t)
      if (!in_fine[static_cast<std::size_t>(coarse.node(t))]) out.push_back(t);
  });
  return out;
}

bool identical(const Mesh& a, const Mesh& b) {
  return a.genealogy() == b.genealogy() && std::ranges::equal(a.nodes(), b.nodes()) &&
         std::ranges::equal(a.global_vertices(), b.global_vertices());
}

double shape_regularity(const Mesh& mesh) {
  double gamma = 1.0;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const double root_area = std::sqrt(mesh.area(t));
    const double diam = mesh.diameter(t);
    gamma = std::max({gamma, diam / root_area, root_area / diam});
  }
  return gamma;
}

double closure_audit(std::span<const RefinementRecord> records) {
  if (records.empty()) throw Error("closure audit needs at least one refinement record");
  const auto initial = static_cast<double>(records.front().elements_before);
  double marked = 0.0;
  double constant = 0.0;
  for (const auto& r : records) {
    marked += static_cast<double>(r.marked.size());
    const double growth = static_cast<double>(r.elements_after) - initial;
    if (marked > 0.0) constant = std::max(constant, growth / marked);
  }
  return constant;
}

ConformityAudit audit_conformity(const Mesh& mesh) {
  ConformityAudit audit;
  double area = 0.0;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const double a = mesh.area(t);
    if (!(a > 0.0)) audit.positive_areas = false;
    area += a;
  }
  double single_length = 0.0;
  for (std::size_t e = 0; e < mesh.num_edges(); ++e) {
    const auto& tris = mesh.edge_triangles(e);
    if (tris[0] < 0) audit.edge_incidence = false;
    if (tris[1] < 0) {
      const auto& ed = mesh.edge(e);
      single_length += (mesh.vertex(static_cast<std::size_t>(ed[0])) - mesh.vertex(static_cast<std::size_t>(ed[1]))).norm();
    }
  }
  const auto& g = *mesh.genealogy();
  if (std::abs(single_length - g.initial_perimeter()) > 1e-10 * g.initial_perimeter())
    audit.no_hanging_nodes = false;
  if (std::abs(area - g.initial_area()) > 1e-10 * g.initial_area()) audit.area_preserved = false;
  return audit;
}

}  // namespace afem
