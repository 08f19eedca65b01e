#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace qroute {

/// Directed arc between global node indices.
using Arc = std::pair<int, int>;
using Route = std::vector<Arc>;

/// Per-vehicle arc lists. Customers are nodes 1..|C|; node 0 is the start
/// depot and `end_depot` is either 0 (closed tours) or |C|+1 (open routes).
struct RoutedSolution {
  std::vector<Route> routes;
  int start_depot = 0;
  int end_depot = 0;
  double distance = 0.0;

  static RoutedSolution closed() { return {}; }
  static RoutedSolution open(std::size_t num_customers) {
    RoutedSolution s;
    s.end_depot = static_cast<int>(num_customers) + 1;
    return s;
  }
};

/// Arcs visiting `path` in order: (p0,p1), (p1,p2), ...
inline Route path_to_arcs(const std::vector<int>& path) {
  Route r;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) r.emplace_back(path[i], path[i + 1]);
  return r;
}

}  // namespace qroute
