#pragma once

// Guided local search for per-cluster TSPs over closed cluster matrices
// ([depot, members...]); the depot stays at tour position 0.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "qroute/clustering.hpp"
#include "qroute/instance_io.hpp"
#include "qroute/parallel.hpp"
#include "qroute/solution.hpp"

namespace qroute {

/// Closed tour [0, v1, ..., v_{n-1}, 0] over local matrix indices.
struct Tour {
  std::vector<int> nodes;
  double length = 0.0;
};

inline double tour_length(const std::vector<int>& nodes, const DistanceMatrix& d) {
  double len = 0.0;
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i)
    len += d(static_cast<std::size_t>(nodes[i]), static_cast<std::size_t>(nodes[i + 1]));
  return len;
}

/// Arc penalties p_ij (symmetric, incremented one at a time) and the
/// penalty factor delta.
class GlsState {
 public:
  explicit GlsState(std::size_t n) : n_(n), penalties_(n * n, 0) {}

  int penalty(int i, int j) const {
    return penalties_[static_cast<std::size_t>(i) * n_ + static_cast<std::size_t>(j)];
  }
  void increment(int i, int j) {
    ++penalties_[static_cast<std::size_t>(i) * n_ + static_cast<std::size_t>(j)];
    if (i != j) ++penalties_[static_cast<std::size_t>(j) * n_ + static_cast<std::size_t>(i)];
  }
  std::size_t size() const noexcept { return n_; }

  double delta = 0.0;
  Tour incumbent;

 private:
  std::size_t n_;
  std::vector<int> penalties_;
};

/// g = sum d_ij + delta * sum p_ij * d_ij over the tour's arcs.
inline double augmented_cost(const std::vector<int>& nodes, const DistanceMatrix& d,
                             const GlsState& state, double delta) {
  double g = 0.0;
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    const auto a = static_cast<std::size_t>(nodes[i]);
    const auto b = static_cast<std::size_t>(nodes[i + 1]);
    g += d(a, b) + delta * state.penalty(nodes[i], nodes[i + 1]) * d(a, b);
  }
  return g;
}

namespace detail {

/// Arc cost under the current augmentation.
struct ArcCost {
  const DistanceMatrix& d;
  const GlsState* state;
  double delta;
  double operator()(int a, int b) const {
    const double base = d(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
    if (!state || delta == 0.0) return base;
    return base * (1.0 + delta * state->penalty(a, b));
  }
};

inline constexpr double kImprovementEps = 1e-10;

/// Cyclic order t (t[0] = depot, no closing repeat). Applies the first
/// improving 2-opt move scanning i from `start`; returns the true-length delta.
inline std::optional<double> two_opt_first(std::vector<int>& t, const ArcCost& cost,
                                           const DistanceMatrix& d, std::size_t start = 0) {
  const std::size_t n = t.size();
  if (n < 4) return std::nullopt;
  for (std::size_t step = 0; step < n - 1; ++step) {
    const std::size_t i = (start + step) % (n - 1);
    for (std::size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;
      const int a = t[i], b = t[i + 1], c = t[j], e = t[(j + 1) % n];
      const double gain = cost(a, c) + cost(b, e) - cost(a, b) - cost(c, e);
      if (gain < -kImprovementEps) {
        const double true_delta = d(a, c) + d(b, e) - d(a, b) - d(c, e);
        std::reverse(t.begin() + static_cast<std::ptrdiff_t>(i + 1),
                     t.begin() + static_cast<std::ptrdiff_t>(j + 1));
        return true_delta;
      }
    }
  }
  return std::nullopt;
}

/// First improving relocation of a 1..3 node segment (either orientation).
inline std::optional<double> or_opt_first(std::vector<int>& t, const ArcCost& cost,
                                          const DistanceMatrix& d) {
  const std::size_t n = t.size();
  if (n < 4) return std::nullopt;
  auto D = [&](int a, int b) { return d(static_cast<std::size_t>(a), static_cast<std::size_t>(b)); };
  for (std::size_t len = 1; len <= 3 && len + 1 < n; ++len) {
    for (std::size_t s = 1; s + len <= n; ++s) {
      const int prev = t[s - 1];
      const int first = t[s];
      const int last = t[s + len - 1];
      const int next = t[(s + len) % n];
      const double removal = cost(prev, next) - cost(prev, first) - cost(last, next);
      const double removal_true = D(prev, next) - D(prev, first) - D(last, next);
      for (std::size_t p = 0; p < n; ++p) {
        if (p + 1 >= s && p < s + len) continue;  // inside or directly before segment
        const int u = t[p];
        const int w = t[(p + 1) % n];
        for (int rev = 0; rev < 2; ++rev) {
          const int head = rev ? last : first;
          const int tail = rev ? first : last;
          const double ins = cost(u, head) + cost(tail, w) - cost(u, w);
          if (removal + ins < -kImprovementEps) {
            const double true_delta = removal_true + D(u, head) + D(tail, w) - D(u, w);
            std::vector<int> seg(t.begin() + static_cast<std::ptrdiff_t>(s),
                                 t.begin() + static_cast<std::ptrdiff_t>(s + len));
            if (rev) std::reverse(seg.begin(), seg.end());
            std::vector<int> rest;
            rest.reserve(n);
            for (std::size_t k = 0; k < n; ++k)
              if (k < s || k >= s + len) rest.push_back(t[k]);
            const auto at = std::find(rest.begin(), rest.end(), u) - rest.begin() + 1;
            rest.insert(rest.begin() + at, seg.begin(), seg.end());
            t = std::move(rest);
            return true_delta;
          }
        }
      }
    }
  }
  return std::nullopt;
}

inline std::vector<int> nearest_neighbor_order(const DistanceMatrix& d) {
  const std::size_t n = d.size();
  std::vector<int> t{0};
  std::vector<char> used(n, 0);
  used[0] = 1;
  for (std::size_t step = 1; step < n; ++step) {
    const auto cur = static_cast<std::size_t>(t.back());
    std::size_t best = n;
    for (std::size_t v = 0; v < n; ++v)
      if (!used[v] && (best == n || d(cur, v) < d(cur, best))) best = v;
    used[best] = 1;
    t.push_back(static_cast<int>(best));
  }
  return t;
}

inline Tour close_tour(std::vector<int> order, const DistanceMatrix& d) {
  order.push_back(0);
  Tour tour{std::move(order), 0.0};
  tour.length = tour_length(tour.nodes, d);
  return tour;
}

}  // namespace detail

/// One first-improvement 2-opt move on a closed tour, or nullopt at a local
/// optimum. With `state`, arcs are priced by the augmented cost.
inline std::optional<Tour> two_opt_step(const Tour& tour, const DistanceMatrix& d,
                                        const GlsState* state = nullptr, double delta = 0.0) {
  if (tour.nodes.size() < 2 || tour.nodes.front() != tour.nodes.back())
    throw std::invalid_argument("tour must be closed");
  std::vector<int> t(tour.nodes.begin(), tour.nodes.end() - 1);
  const detail::ArcCost cost{d, state, delta};
  if (!detail::two_opt_first(t, cost, d)) return std::nullopt;
  return detail::close_tour(std::move(t), d);
}

struct GlsOptions {
  std::size_t iter_budget = 10000;
  double lambda_coeff = 0.3;
  std::uint64_t seed = 0;
  bool or_opt = false;
};

struct GlsResult {
  Tour tour;
  std::vector<double> incumbent_trace;  // true length after each improvement
  std::size_t steps = 0;
};

/// Guided local search: nearest-neighbour start, 2-opt descent on the
/// augmented cost, and at every local optimum the arcs of maximal utility
/// d_ij / (1 + p_ij) get their penalty incremented. The incumbent is kept
/// under the true cost. Every applied move and every penalisation round
/// consumes one step of `iter_budget`.
inline GlsResult gls_tsp_traced(const DistanceMatrix& d, const GlsOptions& opt = {}) {
  const std::size_t n = d.size();
  if (n < 2) throw std::invalid_argument("tour needs at least two nodes");

  GlsResult res;
  std::vector<int> t = detail::nearest_neighbor_order(d);
  double len = tour_length(detail::close_tour(t, d).nodes, d);
  auto record = [&] {
    res.tour = detail::close_tour(t, d);
    res.incumbent_trace.push_back(res.tour.length);
  };
  record();
  if (n <= 3) return res;

  std::mt19937_64 rng(opt.seed);
  GlsState state(n);
  auto descend = [&](double delta) {
    const detail::ArcCost cost{d, &state, delta};
    while (res.steps < opt.iter_budget) {
      auto moved = detail::two_opt_first(t, cost, d, opt.seed ? rng() % (n - 1) : 0);
      if (!moved && opt.or_opt) moved = detail::or_opt_first(t, cost, d);
      if (!moved) return;
      ++res.steps;
      len += *moved;
      if (len < res.tour.length - detail::kImprovementEps) record();
    }
  };

  descend(0.0);
  state.delta = opt.lambda_coeff * len / static_cast<double>(n);
  while (res.steps < opt.iter_budget) {
    double best_util = -1.0;
    std::vector<std::pair<int, int>> arcs;
    for (std::size_t i = 0; i < n; ++i) {
      const int a = t[i], b = t[(i + 1) % n];
      const double util = d(static_cast<std::size_t>(a), static_cast<std::size_t>(b)) /
                          (1.0 + state.penalty(a, b));
      if (util > best_util + 1e-12) {
        best_util = util;
        arcs.assign(1, {a, b});
      } else if (util >= best_util - 1e-12) {
        arcs.emplace_back(a, b);
      }
    }
    for (const auto& [a, b] : arcs) state.increment(a, b);
    ++res.steps;
    descend(state.delta);
  }
  // Recompute from scratch to drop accumulated rounding.
  res.tour.length = tour_length(res.tour.nodes, d);
  return res;
}

inline Tour gls_tsp(const DistanceMatrix& d, const GlsOptions& opt = {}) {
  return gls_tsp_traced(d, opt).tour;
}

/// Maps a local closed tour onto global node ids (depot 0, customer i -> i+1).
inline Route tour_to_global_arcs(const Tour& tour, const std::vector<int>& cluster) {
  std::vector<int> path;
  path.reserve(tour.nodes.size());
  for (int v : tour.nodes) path.push_back(v == 0 ? 0 : cluster[static_cast<std::size_t>(v - 1)] + 1);
  return path_to_arcs(path);
}

/// Routes every non-empty cluster independently; closed tours at depot 0.
inline RoutedSolution route_clusters(const Instance& inst, const ClusterAssignment& assign,
                                     const GlsOptions& opt = {}) {
  RoutedSolution sol = RoutedSolution::closed();
  std::vector<std::vector<int>> clusters;
  for (int k = 0; k < assign.num_clusters; ++k) {
    auto m = assign.members(k);
    if (!m.empty()) clusters.push_back(std::move(m));
  }
  std::vector<Tour> tours(clusters.size());
  parallel_for(clusters.size(), [&](std::size_t c) {
    tours[c] = gls_tsp(cluster_distance_matrix_closed(inst, clusters[c]), opt);
  });
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    sol.routes.push_back(tour_to_global_arcs(tours[c], clusters[c]));
    sol.distance += tours[c].length;
  }
  return sol;
}

}  // namespace qroute
