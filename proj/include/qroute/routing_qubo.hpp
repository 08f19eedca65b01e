#pragma once

// Hamiltonian-cycle TSP QUBO per cluster. Variable x[j][v] is set when node
// v (0 = depot) occupies position j of the cycle.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "qroute/clustering.hpp"
#include "qroute/instance_io.hpp"
#include "qroute/parallel.hpp"
#include "qroute/qubo_model.hpp"
#include "qroute/samplers.hpp"
#include "qroute/solution.hpp"
#include "qroute/validation.hpp"

namespace qroute {

enum class TspMultiplierMode {
  kEquation,        // H = m_A * H_A + m_B * H_B
  kListingSquared,  // H = m_A * (m_A * H_A) + m_B * H_B, as the reference code does
};

struct TspMultipliers {
  double a = 150.0;  // Hamiltonian-cycle constraints
  double b = 700.0;  // edge cost
  TspMultiplierMode mode = TspMultiplierMode::kEquation;
  bool close_cycle = true;  // price the last-position -> depot arc inside H_B
};

struct TspQubo {
  BinaryPolynomial hamiltonian;
  std::size_t num_customers = 0;  // n; positions and nodes are 0..n
  TspMultipliers multipliers;

  std::size_t side() const noexcept { return num_customers + 1; }
  std::size_t index(std::size_t position, std::size_t node) const { return position * side() + node; }
};

/// Builds H over the closed cluster matrix [depot, members...]:
///   C1 = sum_v (1 - sum_j x[j][v])^2, C2 = sum_j (1 - sum_v x[j][v])^2,
///   C3 = (1 - x[0][0])^2, H_B = sum_{h != i} sum_j d_hi x[j][h] x[j+1][i].
/// Positions wrap (j = n pairs with position 0) unless `close_cycle` is off,
/// in which case H_B is the open chain j < n and the return arc is unpriced.
inline TspQubo tsp_qubo_build(const DistanceMatrix& d, const TspMultipliers& mult = {}) {
  if (d.size() < 2) throw std::invalid_argument("TSP QUBO needs at least one customer");
  if (!(mult.a > 0.0) || !(mult.b > 0.0)) throw std::invalid_argument("multipliers must be positive");
  const std::size_t side = d.size();
  auto reg = make_registry();
  const std::size_t x0 = reg->add_array("x", {side, side});
  auto x = [&](std::size_t j, std::size_t v) { return x0 + j * side + v; };

  BinaryPolynomial cycle(reg);
  for (std::size_t v = 0; v < side; ++v) {
    BinaryPolynomial col = BinaryPolynomial::constant(reg, 1.0);
    for (std::size_t j = 0; j < side; ++j) col.add_term({x(j, v)}, -1.0);
    cycle += poly_square(col);
  }
  for (std::size_t j = 0; j < side; ++j) {
    BinaryPolynomial row = BinaryPolynomial::constant(reg, 1.0);
    for (std::size_t v = 0; v < side; ++v) row.add_term({x(j, v)}, -1.0);
    cycle += poly_square(row);
  }
  BinaryPolynomial anchor = BinaryPolynomial::constant(reg, 1.0);
  anchor.add_term({x(0, 0)}, -1.0);
  cycle += poly_square(anchor);

  BinaryPolynomial edges(reg);
  for (std::size_t h = 0; h < side; ++h)
    for (std::size_t i = 0; i < side; ++i) {
      if (h == i) continue;
      for (std::size_t j = 0; j < side; ++j) {
        if (j + 1 == side && !mult.close_cycle) continue;
        edges.add_term({x(j, h), x((j + 1) % side, i)}, d(h, i));
      }
    }

  const double cycle_weight = mult.mode == TspMultiplierMode::kListingSquared ? mult.a * mult.a : mult.a;
  BinaryPolynomial h = cycle_weight * cycle + mult.b * edges;
  return {std::move(h), side - 1, mult};
}

struct TspDecode {
  bool valid = false;
  std::vector<int> path;              // global node ids, closed at 0
  Route arcs;
  std::vector<std::size_t> bad_positions;  // zero or several nodes set
  std::vector<std::size_t> repeated_nodes; // local nodes used at several positions
};

/// Position-ordered decode; local node v > 0 maps to cluster[v-1] + 1.
inline TspDecode tsp_qubo_decode(std::span<const std::uint8_t> sample, std::size_t n,
                                 const std::vector<int>& cluster) {
  const std::size_t side = n + 1;
  if (sample.size() < side * side) throw std::invalid_argument("sample shorter than TSP block");
  if (cluster.size() != n) throw std::invalid_argument("cluster size mismatch");
  TspDecode out;
  std::vector<int> uses(side, 0);
  for (std::size_t j = 0; j < side; ++j) {
    int count = 0;
    std::size_t node = 0;
    for (std::size_t v = 0; v < side; ++v)
      if (sample[j * side + v]) {
        ++count;
        node = v;
      }
    if (count != 1) {
      out.bad_positions.push_back(j);
      continue;
    }
    ++uses[node];
    out.path.push_back(node == 0 ? 0 : cluster[node - 1] + 1);
  }
  for (std::size_t v = 0; v < side; ++v)
    if (uses[v] > 1) out.repeated_nodes.push_back(v);
  out.path.push_back(0);
  out.arcs = path_to_arcs(out.path);
  out.valid = out.bad_positions.empty() && out.repeated_nodes.empty() && !out.path.empty() &&
              out.path.front() == 0;
  return out;
}

struct QuboRoutingResult {
  RoutedSolution solution;
  int routing_errors = 0;  // clusters whose best sample is not a valid cycle
};

/// Samples one TSP QUBO per non-empty cluster with simulated annealing.
inline QuboRoutingResult qubo_route_clusters(const Instance& inst, const ClusterAssignment& assign,
                                             const AnnealParams& params, const TspMultipliers& mult = {}) {
  if (params.num_reads == 0) throw std::invalid_argument("num_reads must be positive");
  QuboRoutingResult res;
  res.solution = RoutedSolution::closed();
  std::vector<std::vector<int>> clusters;
  for (int k = 0; k < assign.num_clusters; ++k) {
    auto m = assign.members(k);
    if (!m.empty()) clusters.push_back(std::move(m));
  }
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    const auto d = cluster_distance_matrix_closed(inst, clusters[c]);
    const auto tsp = tsp_qubo_build(d, mult);
    AnnealParams p = params;
    p.seed = params.seed + c;
    const auto samples = simulated_annealing(compile(tsp.hamiltonian), p);
    const auto decoded = tsp_qubo_decode(samples.first().sample, clusters[c].size(), clusters[c]);
    if (!decoded.valid) {
      ++res.routing_errors;
      continue;
    }
    res.solution.routes.push_back(decoded.arcs);
  }
  res.solution.distance = total_distance(res.solution, inst);
  return res;
}

}  // namespace qroute
