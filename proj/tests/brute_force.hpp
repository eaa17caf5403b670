#pragma once

#include <cmath>
#include <set>
#include <stdexcept>

#include "pedagogy/metrics/metrics.hpp"
#include "pedagogy/tasks/factory.hpp"

namespace brute {

using namespace pedagogy;
using metrics::Point;

// Independent reference implementations of the metrics.

inline double brute_corner(const Point& e1, const Point& e2, const RectangleConcept& c) {
  std::vector<Point> corners;
  for (double x : {c.min_x, c.max_x})
    for (double y : {c.min_y, c.max_y}) corners.push_back({x, y});
  double best = INFINITY;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      // opposite corners differ in both coordinates' roles: index bits both flipped
      if ((i ^ j) != 3) continue;
      const double d = std::sqrt(std::pow(e1[0] - corners[i][0], 2) + std::pow(e1[1] - corners[i][1], 2)) +
                       std::sqrt(std::pow(e2[0] - corners[j][0], 2) + std::pow(e2[1] - corners[j][1], 2));
      best = std::min(best, d);
    }
  return best;
}

// Sorted matching minimises squared distance, so take the min over both matchings.
inline double brute_mode(double e1, double e2, double m1, double m2) {
  const double lo = std::min(m1, m2), hi = std::max(m1, m2);
  return std::min(std::sqrt((e1 - lo) * (e1 - lo) + (e2 - hi) * (e2 - hi)),
                  std::sqrt((e2 - lo) * (e2 - lo) + (e1 - hi) * (e1 - hi)));
}

inline bool brute_boolean(const Properties& a, const Properties& b, const BooleanConcept& c) {
  std::set<std::pair<int, int>> sa, sb, shared, req;
  const auto va = a.values(), vb = b.values();
  for (int g = 0; g < 4; ++g) {
    sa.insert({g, va[g]});
    sb.insert({g, vb[g]});
    if (c.required[g] >= 0) req.insert({g, c.required[g]});
  }
  for (const auto& p : sa)
    if (sb.count(p)) shared.insert(p);
  return shared == req;
}

inline std::size_t brute_lca(const Hierarchy& h, std::size_t a, std::size_t b) {
  std::set<std::size_t> up;
  for (std::optional<std::size_t> n = a; n; n = h.node(*n).parent) up.insert(*n);
  for (std::optional<std::size_t> n = b; n; n = h.node(*n).parent)
    if (up.count(*n)) return *n;
  throw std::logic_error("no common ancestor");
}

}  // namespace brute
