#pragma once

// Constraint audit for routed solutions. Never throws on malformed input;
// defects are counted instead.

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <set>
#include <vector>

#include "qroute/instance_io.hpp"
#include "qroute/solution.hpp"

namespace qroute {

struct ViolationReport {
  int visit_errors = 0;          // customers visited zero or several times
  int missing_start = 0;         // vehicles with no arc leaving the start depot
  int dead_ends = 0;             // arrivals without exactly one departure
  int impossible_departures = 0; // departures without exactly one arrival
  int missing_end = 0;           // vehicles with no arc into the end depot
  int disconnected_loops = 0;    // extra connected components per vehicle
  int capacity_excess = 0;       // vehicles loaded above capacity
  int malformed_arcs = 0;        // arcs referencing unknown nodes

  int total() const {
    return visit_errors + missing_start + dead_ends + impossible_departures + missing_end +
           disconnected_loops + capacity_excess + malformed_arcs;
  }
  friend bool operator==(const ViolationReport&, const ViolationReport&) = default;
};

/// Demand carried by each vehicle: heads of arcs that are customers.
inline std::vector<long long> route_loads(const RoutedSolution& sol, const std::vector<int>& demands) {
  std::vector<long long> loads;
  loads.reserve(sol.routes.size());
  const int n = static_cast<int>(demands.size());
  for (const auto& route : sol.routes) {
    long long load = 0;
    for (const auto& [from, to] : route) {
      if (to == sol.start_depot || to == sol.end_depot) continue;
      if (to >= 1 && to <= n) load += demands[static_cast<std::size_t>(to - 1)];
    }
    loads.push_back(load);
  }
  return loads;
}

inline double total_distance(const RoutedSolution& sol, const DistanceMatrix& dist) {
  double total = 0.0;
  const auto n = static_cast<int>(dist.size());
  for (const auto& route : sol.routes)
    for (const auto& [i, j] : route)
      if (i >= 0 && j >= 0 && i < n && j < n) total += dist(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  return total;
}

/// Distance on the instance geometry; both depot indices map to the depot.
inline double total_distance(const RoutedSolution& sol, const Instance& inst) {
  const int n = static_cast<int>(inst.num_customers());
  auto point = [&](int v) -> const Point& {
    if (v == sol.start_depot || v == sol.end_depot || v == 0 || v == n + 1) return inst.depot_coord;
    return inst.customer_coords[static_cast<std::size_t>(v - 1)];
  };
  double total = 0.0;
  for (const auto& route : sol.routes)
    for (const auto& [i, j] : route)
      if (i >= 0 && j >= 0 && i <= n + 1 && j <= n + 1) total += euclidean(point(i), point(j));
  return total;
}

namespace detail {

inline int count_components(const Route& route) {
  std::vector<int> nodes;
  for (const auto& [a, b] : route) {
    nodes.push_back(a);
    nodes.push_back(b);
  }
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  std::vector<std::size_t> parent(nodes.size());
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  auto idx = [&](int v) {
    return static_cast<std::size_t>(std::lower_bound(nodes.begin(), nodes.end(), v) - nodes.begin());
  };
  int components = static_cast<int>(nodes.size());
  for (const auto& [a, b] : route) {
    const auto ra = find(idx(a)), rb = find(idx(b));
    if (ra != rb) {
      parent[ra] = rb;
      --components;
    }
  }
  return components;
}

}  // namespace detail

/// Audits visit multiplicity, depot start/end, flow continuity, connectivity
/// and capacity for every vehicle in `sol`.
inline ViolationReport check_solution(const RoutedSolution& sol, const std::vector<int>& demands,
                                      long long capacity) {
  ViolationReport rep;
  const int n = static_cast<int>(demands.size());
  const int start = sol.start_depot;
  const int end = sol.end_depot;
  auto valid_node = [&](int v) { return v >= 0 && v <= n + 1 && (v <= n || end == n + 1); };

  std::vector<int> visits(static_cast<std::size_t>(n), 0);
  for (const auto& route : sol.routes) {
    Route clean;
    for (const auto& arc : route) {
      if (!valid_node(arc.first) || !valid_node(arc.second)) {
        ++rep.malformed_arcs;
        continue;
      }
      clean.push_back(arc);
    }
    bool starts = false, ends = false;
    for (const auto& [from, to] : clean) {
      if (to >= 1 && to <= n) ++visits[static_cast<std::size_t>(to - 1)];
      starts |= from == start;
      ends |= to == end;
    }
    if (!starts) ++rep.missing_start;
    if (!ends) ++rep.missing_end;

    for (const auto& [from, to] : clean) {
      if (to != end) {
        const auto leaving = std::count_if(clean.begin(), clean.end(), [&](const Arc& t) {
          return t.first == to && t.first != t.second;
        });
        if (leaving != 1) ++rep.dead_ends;
      }
      if (from != start) {
        const auto arriving = std::count_if(clean.begin(), clean.end(), [&](const Arc& t) {
          return t.second == from && t.first != t.second;
        });
        if (arriving != 1) ++rep.impossible_departures;
      }
    }
    if (!clean.empty()) rep.disconnected_loops += detail::count_components(clean) - 1;
  }
  for (int v : visits)
    if (v != 1) ++rep.visit_errors;

  for (long long load : route_loads(sol, demands))
    if (load > capacity) ++rep.capacity_excess;
  return rep;
}

inline ViolationReport check_solution(const RoutedSolution& sol, const Instance& inst) {
  return check_solution(sol, inst.demands, inst.capacity);
}

}  // namespace qroute
