#include "afem/genealogy.hpp"

#include <algorithm>
#include <limits>

namespace afem {

namespace {

std::uint64_t edge_key(std::int32_t a, std::int32_t b) {
  const auto lo = static_cast<std::uint64_t>(std::min(a, b));
  const auto hi = static_cast<std::uint64_t>(std::max(a, b));
  return (lo << 32) | hi;
}

}  // namespace

Genealogy::Genealogy(std::vector<Point> vertices,
                     const std::vector<std::array<std::int32_t, 3>>& roots, double perimeter,
                     double area)
    : perimeter_(perimeter), area_(area), root_count_(roots.size()) {
  ledger_.vertex_parents_.assign(vertices.size(), {-1, -1});
  ledger_.vertices_ = std::move(vertices);
  ledger_.nodes_.reserve(roots.size());
  for (std::size_t i = 0; i < roots.size(); ++i) {
    Node n;
    n.vertices = roots[i];
    n.root = static_cast<std::int32_t>(i);
    ledger_.nodes_.push_back(n);
  }
  ledger_.root_count_ = roots.size();
}

std::int32_t Genealogy::Ledger::midpoint(std::int32_t a, std::int32_t b) {
  const auto key = edge_key(a, b);
  if (auto it = midpoints_.find(key); it != midpoints_.end()) return it->second;
  const auto id = static_cast<std::int32_t>(vertices_.size());
  vertices_.push_back(0.5 * (vertex(a) + vertex(b)));
  vertex_parents_.push_back({std::min(a, b), std::max(a, b)});
  midpoints_.emplace(key, id);
  return id;
}

std::array<std::int32_t, 2> Genealogy::Ledger::bisect(std::int32_t id) {
  if (nodes_[static_cast<std::size_t>(id)].sons[0] >= 0) return nodes_[static_cast<std::size_t>(id)].sons;

  const Node parent = nodes_[static_cast<std::size_t>(id)];
  const auto [v0, v1, v2] = parent.vertices;
  const auto m = midpoint(v1, v2);

  // The midpoint is the newest vertex of both sons; their reference edges
  // are the two edges of the parent that were not bisected.
  Node left;
  left.vertices = {m, v0, v1};
  Node right;
  right.vertices = {m, v2, v0};
  for (Node* son : {&left, &right}) {
    son->parent = id;
    son->root = parent.root;
    son->generation = parent.generation + 1;
  }
  const auto l = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(left);
  nodes_.push_back(right);
  nodes_[static_cast<std::size_t>(id)].sons = {l, l + 1};
  return {l, l + 1};
}

}  // namespace afem
