#pragma once

// Distances and match flags between a policy's two teaching examples and the
// intuitive human strategy for each task.

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "pedagogy/tasks/bimodal.hpp"
#include "pedagogy/tasks/boolean.hpp"
#include "pedagogy/tasks/hierarchy.hpp"
#include "pedagogy/tasks/rectangle.hpp"

namespace pedagogy::metrics {

using Point = std::array<double, 2>;

/// min over opposite-corner pairs s (both diagonals, both orders) of |e1 - s1| + |e2 - s2|.
inline double corner_distance(const Point& e1, const Point& e2, const RectangleConcept& c) {
  c.validate();
  const Point ll{c.min_x, c.min_y}, ur{c.max_x, c.max_y}, lr{c.max_x, c.min_y}, ul{c.min_x, c.max_y};
  auto d = [](const Point& a, const Point& b) { return std::hypot(a[0] - b[0], a[1] - b[1]); };
  return std::min({d(e1, ll) + d(e2, ur), d(e1, ur) + d(e2, ll), d(e1, lr) + d(e2, ul), d(e1, ul) + d(e2, lr)});
}

/// L2 distance between the ascending-sorted examples and ascending-sorted modes.
inline double mode_distance(double e1, double e2, double mu1, double mu2) {
  if (e1 > e2) std::swap(e1, e2);
  if (mu1 > mu2) std::swap(mu1, mu2);
  return std::hypot(e1 - mu1, e2 - mu2);
}

/// True iff the property values shared by both examples are exactly the concept's constraints.
inline bool boolean_intuitive_match(const Properties& e1, const Properties& e2, const BooleanConcept& c) {
  if (!boolean_consistent(e1, c) || !boolean_consistent(e2, c))
    throw std::invalid_argument("boolean_intuitive_match: example inconsistent with the concept");
  const auto a = e1.values(), b = e2.values();
  for (std::size_t g = 0; g < 4; ++g) {
    const bool shared = a[g] == b[g];
    const bool required = c.required[g] >= 0;
    if (shared != required) return false;
  }
  return true;
}

/// True iff the lowest common ancestor of the two example leaves is the concept node.
inline bool lca_match(const Hierarchy& h, std::size_t leaf1, std::size_t leaf2, std::size_t concept_node) {
  if (!h.is_leaf(leaf1) || !h.is_leaf(leaf2)) throw std::invalid_argument("lca_match: examples must be leaf nodes");
  h.node(concept_node);
  return h.lca(leaf1, leaf2) == concept_node;
}

}  // namespace pedagogy::metrics
