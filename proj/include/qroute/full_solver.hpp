#pragma once

// Monolithic CVRP QUBO over x[i][j][k] (vehicle k drives i -> j). Start depot
// is node 0, end depot node |C|+1. Only usable on toy instances.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qroute/instance_io.hpp"
#include "qroute/qubo_model.hpp"
#include "qroute/samplers.hpp"
#include "qroute/solution.hpp"
#include "qroute/validation.hpp"

namespace qroute {

enum class CapacitySlack { kUnary, kBinary };

struct CvrpMultipliers {
  double cost = 1.0;
  double m1 = 0.0, m2 = 0.0, m3 = 0.0, m4 = 0.0, m5 = 0.0, m6 = 0.0;

  /// cost = 1 and every m_t = 10 * max distance * |C|.
  static CvrpMultipliers defaults_for(const Instance& inst) {
    const double m = 10.0 * full_distance_matrix(inst).max_entry() *
                     static_cast<double>(std::max<std::size_t>(inst.num_customers(), 1));
    return {1.0, m, m, m, m, m, m};
  }
};

struct VariableCensus {
  std::size_t decision = 0;
  std::size_t capacity_slack = 0;
  std::size_t subtour_slack = 0;
  std::size_t total() const noexcept { return decision + capacity_slack + subtour_slack; }
  friend bool operator==(const VariableCensus&, const VariableCensus&) = default;
};

namespace detail {

inline std::size_t binary_slack_bits(long long upper) {
  if (upper < 1) return 0;
  return static_cast<std::size_t>(std::bit_width(static_cast<unsigned long long>(upper)));
}

inline std::size_t capacity_slack_bits(long long capacity, CapacitySlack enc) {
  return enc == CapacitySlack::kUnary ? static_cast<std::size_t>(std::max(0LL, capacity - 1))
                                      : binary_slack_bits(capacity);
}

inline std::size_t subtour_slack_count(std::size_t n) {
  std::size_t total = 0;
  double binom = 1.0;  // C(n, s)
  for (std::size_t s = 1; s <= n; ++s) {
    binom = binom * static_cast<double>(n - s + 1) / static_cast<double>(s);
    if (s >= 2) total += static_cast<std::size_t>(std::llround(binom)) * (s - 1);
  }
  return total;
}

}  // namespace detail

inline VariableCensus variable_census(std::size_t customers, std::size_t vehicles, long long capacity,
                                      CapacitySlack enc = CapacitySlack::kUnary) {
  VariableCensus c;
  c.decision = (customers + 2) * (customers + 2) * vehicles;
  c.capacity_slack = vehicles * detail::capacity_slack_bits(capacity, enc);
  c.subtour_slack = detail::subtour_slack_count(customers);
  return c;
}

struct CvrpQubo {
  BinaryPolynomial hamiltonian;
  CvrpMultipliers multipliers;
  VariableCensus census;
  std::size_t num_customers = 0;
  std::size_t num_vehicles = 0;
  long long capacity = 0;
  std::vector<int> demands;
  DistanceMatrix distances;  // [depot, customers..., depot]
  std::vector<SlackEncoding> capacity_slack;  // per vehicle
  std::vector<std::uint32_t> subsets;         // customer bitmasks, bit c = customer c+1
  std::vector<SlackEncoding> subtour_slack;   // per subset

  std::size_t nodes() const noexcept { return num_customers + 2; }
  std::size_t index(std::size_t i, std::size_t j, std::size_t k) const {
    return (i * nodes() + j) * num_vehicles + k;
  }
  /// Self-arcs, arcs into the start depot and arcs out of the end depot.
  bool forbidden(std::size_t i, std::size_t j) const {
    return i == j || j == 0 || i == num_customers + 1;
  }
};

class SubsetLimitError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// H = cost * sum c_ij x_ijk + sum_t m_t C_t with
///   C1 = sum_i (1 - sum_{k, j != i} x_ijk)^2 plus each forbidden arc once,
///   C2 = sum_k (1 - sum_j x_0jk)^2,   C3 = sum_k (1 - sum_i x_{i,end,k})^2,
///   C4 = sum_{h,k} (sum_{i != h} x_ihk - sum_{j != h} x_hjk)^2,
///   C5 = sum_k (sum_{i != j in C} d_i x_ijk - Q + slack_k)^2,
///   C6 = sum_S (sum_k sum_{i != j in S} x_ijk - (|S|-1) + slack_S)^2.
/// Subsets are visited in increasing bitmask order.
inline CvrpQubo cvrp_qubo_build(const Instance& inst, const CvrpMultipliers& mult,
                                std::size_t subset_limit = 12,
                                CapacitySlack enc = CapacitySlack::kUnary) {
  const std::size_t n = inst.num_customers();
  if (n > subset_limit)
    throw SubsetLimitError("full CVRP QUBO refused: " + std::to_string(n) + " customers exceed the limit of " +
                           std::to_string(subset_limit) +
                           "; sub-tour constraints grow exponentially with the number of customers");
  if (n > 31) throw SubsetLimitError("subset masks are limited to 31 customers");
  if (inst.num_vehicles < 1) throw std::invalid_argument("instance has no vehicles");
  if (inst.capacity < 1) throw std::invalid_argument("capacity must be positive");

  const std::size_t big_n = n + 2;
  const auto K = static_cast<std::size_t>(inst.num_vehicles);
  const std::size_t end = n + 1;
  auto reg = make_registry();
  const std::size_t x0 = reg->add_array("x", {big_n, big_n, K});

  CvrpQubo out{BinaryPolynomial(reg), mult, variable_census(n, K, inst.capacity, enc), n, K,
               inst.capacity, inst.demands, full_distance_matrix(inst), {}, {}, {}};
  auto x = [&](std::size_t i, std::size_t j, std::size_t k) { return x0 + out.index(i, j, k); };
  auto constant = [&](double c) { return BinaryPolynomial::constant(reg, c); };

  BinaryPolynomial cost(reg);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t i = 0; i < big_n; ++i)
      for (std::size_t j = 0; j < big_n; ++j)
        if (i != j) cost.add_term({x(i, j, k)}, out.distances(i, j));

  BinaryPolynomial c1(reg);
  for (std::size_t i = 1; i <= n; ++i) {
    BinaryPolynomial t = constant(1.0);
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t j = 0; j < big_n; ++j)
        if (j != i) t.add_term({x(i, j, k)}, -1.0);
    c1 += poly_square(t);
  }
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t i = 0; i < big_n; ++i)
      for (std::size_t j = 0; j < big_n; ++j)
        if (out.forbidden(i, j)) c1.add_term({x(i, j, k)}, 1.0);

  BinaryPolynomial c2(reg), c3(reg);
  for (std::size_t k = 0; k < K; ++k) {
    BinaryPolynomial s = constant(1.0), e = constant(1.0);
    for (std::size_t j = 1; j < big_n; ++j) s.add_term({x(0, j, k)}, -1.0);
    for (std::size_t i = 0; i < end; ++i) e.add_term({x(i, end, k)}, -1.0);
    c2 += poly_square(s);
    c3 += poly_square(e);
  }

  BinaryPolynomial c4(reg);
  for (std::size_t h = 1; h <= n; ++h)
    for (std::size_t k = 0; k < K; ++k) {
      BinaryPolynomial t(reg);
      for (std::size_t i = 0; i < big_n; ++i)
        if (i != h) t.add_term({x(i, h, k)}, 1.0);
      for (std::size_t j = 0; j < big_n; ++j)
        if (j != h) t.add_term({x(h, j, k)}, -1.0);
      c4 += poly_square(t);
    }

  BinaryPolynomial c5(reg);
  for (std::size_t k = 0; k < K; ++k) {
    BinaryPolynomial t = constant(-static_cast<double>(inst.capacity));
    for (std::size_t i = 1; i <= n; ++i)
      for (std::size_t j = 1; j <= n; ++j)
        if (i != j) t.add_term({x(i, j, k)}, inst.demands[i - 1]);
    const std::string name = "capacity_slack_" + std::to_string(k);
    if (enc == CapacitySlack::kUnary) {
      if (inst.capacity > 1)
        out.capacity_slack.push_back(add_slack_unary(reg, name, static_cast<double>(inst.capacity - 1), 1.0));
      else
        out.capacity_slack.push_back({BinaryPolynomial(reg), {}, reg->total_count()});
    } else {
      out.capacity_slack.push_back(add_slack_binary(reg, name, inst.capacity));
    }
    t += out.capacity_slack.back().form;
    c5 += poly_square(t);
  }

  BinaryPolynomial c6(reg);
  const std::uint32_t full = n == 0 ? 0u : ((1u << n) - 1u);
  for (std::uint32_t mask = 1; mask <= full && mask != 0; ++mask) {
    const int size = std::popcount(mask);
    if (size < 2) continue;
    BinaryPolynomial t = constant(-static_cast<double>(size - 1));
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t a = 0; a < n; ++a) {
        if (!(mask >> a & 1u)) continue;
        for (std::size_t b = 0; b < n; ++b)
          if (a != b && (mask >> b & 1u)) t.add_term({x(a + 1, b + 1, k)}, 1.0);
      }
    out.subsets.push_back(mask);
    out.subtour_slack.push_back(add_slack_unary(reg, "subtour_slack_" + std::to_string(mask),
                                                static_cast<double>(size - 1), 1.0));
    t += out.subtour_slack.back().form;
    c6 += poly_square(t);
  }

  out.hamiltonian = mult.cost * cost + mult.m1 * c1 + mult.m2 * c2 + mult.m3 * c3 + mult.m4 * c4 +
                    mult.m5 * c5 + mult.m6 * c6;
  return out;
}

/// Every set x_ijk becomes arc (i, j) of vehicle k, verbatim.
inline RoutedSolution cvrp_qubo_decode(std::span<const std::uint8_t> sample, std::size_t customers,
                                       std::size_t vehicles) {
  RoutedSolution sol = RoutedSolution::open(customers);
  sol.routes.resize(vehicles);
  const std::size_t big_n = customers + 2;
  for (std::size_t i = 0; i < big_n; ++i)
    for (std::size_t j = 0; j < big_n; ++j)
      for (std::size_t k = 0; k < vehicles; ++k) {
        const std::size_t idx = (i * big_n + j) * vehicles + k;
        if (idx < sample.size() && sample[idx])
          sol.routes[k].emplace_back(static_cast<int>(i), static_cast<int>(j));
      }
  return sol;
}

/// Constraint residuals evaluated directly on a sample, independent of the
/// polynomial.
struct CvrpResiduals {
  double cost = 0.0;
  double c1 = 0.0, c2 = 0.0, c3 = 0.0, c4 = 0.0, c5 = 0.0, c6 = 0.0;

  double energy(const CvrpMultipliers& m) const {
    return m.cost * cost + m.m1 * c1 + m.m2 * c2 + m.m3 * c3 + m.m4 * c4 + m.m5 * c5 + m.m6 * c6;
  }
};

inline CvrpResiduals cvrp_residuals(const CvrpQubo& q, std::span<const std::uint8_t> sample) {
  const std::size_t n = q.num_customers, K = q.num_vehicles, big_n = q.nodes(), end = n + 1;
  if (sample.size() < q.census.total()) throw std::invalid_argument("sample shorter than the QUBO");
  auto x = [&](std::size_t i, std::size_t j, std::size_t k) -> double { return sample[q.index(i, j, k)]; };
  auto slack_value = [&](const SlackEncoding& s) {
    double v = 0.0;
    for (std::size_t l = 0; l < s.weights.size(); ++l) v += s.weights[l] * sample[s.offset + l];
    return v;
  };
  auto sq = [](double v) { return v * v; };

  CvrpResiduals r;
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t i = 0; i < big_n; ++i)
      for (std::size_t j = 0; j < big_n; ++j) {
        if (i != j) r.cost += q.distances(i, j) * x(i, j, k);
        if (q.forbidden(i, j)) r.c1 += x(i, j, k);
      }
  for (std::size_t i = 1; i <= n; ++i) {
    double out_arcs = 0.0;
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t j = 0; j < big_n; ++j)
        if (j != i) out_arcs += x(i, j, k);
    r.c1 += sq(1.0 - out_arcs);
  }
  for (std::size_t k = 0; k < K; ++k) {
    double starts = 0.0, ends = 0.0;
    for (std::size_t j = 1; j < big_n; ++j) starts += x(0, j, k);
    for (std::size_t i = 0; i < end; ++i) ends += x(i, end, k);
    r.c2 += sq(1.0 - starts);
    r.c3 += sq(1.0 - ends);
    for (std::size_t h = 1; h <= n; ++h) {
      double flow = 0.0;
      for (std::size_t v = 0; v < big_n; ++v)
        if (v != h) flow += x(v, h, k) - x(h, v, k);
      r.c4 += sq(flow);
    }
    double load = 0.0;
    for (std::size_t i = 1; i <= n; ++i)
      for (std::size_t j = 1; j <= n; ++j)
        if (i != j) load += q.demands[i - 1] * x(i, j, k);
    r.c5 += sq(load - static_cast<double>(q.capacity) + slack_value(q.capacity_slack[k]));
  }
  for (std::size_t s = 0; s < q.subsets.size(); ++s) {
    const std::uint32_t mask = q.subsets[s];
    double inside = 0.0;
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
          if (a != b && (mask >> a & 1u) && (mask >> b & 1u)) inside += x(a + 1, b + 1, k);
    r.c6 += sq(inside - static_cast<double>(std::popcount(mask) - 1) + slack_value(q.subtour_slack[s]));
  }
  return r;
}

enum class FullSampler { kAnneal, kDecomposition };

struct FullSolveParams {
  FullSampler sampler = FullSampler::kAnneal;
  AnnealParams anneal{10000, 1000, 0.0, 0.0, 0};
  std::size_t subsize = 47;
  std::size_t rounds = 50;
  InnerSampler inner{};
  std::size_t subset_limit = 12;
  CapacitySlack capacity_slack = CapacitySlack::kUnary;
};

struct FullSolveResult {
  RoutedSolution solution;
  double energy = 0.0;
  ViolationReport violations;
};

inline FullSolveResult solve_full(const Instance& inst, const FullSolveParams& params,
                                  const CvrpMultipliers& mult) {
  const CvrpQubo q = cvrp_qubo_build(inst, mult, params.subset_limit, params.capacity_slack);
  const QuboCompiled compiled = compile(q.hamiltonian);
  const SampleSet samples =
      params.sampler == FullSampler::kAnneal
          ? simulated_annealing(compiled, params.anneal)
          : decompose_solve(compiled, params.subsize, params.rounds, params.inner, params.anneal.seed);
  FullSolveResult res;
  res.energy = samples.first().energy;
  res.solution = cvrp_qubo_decode(samples.first().sample, q.num_customers, q.num_vehicles);
  res.solution.distance = total_distance(res.solution, q.distances);
  res.violations = check_solution(res.solution, inst);
  return res;
}

}  // namespace qroute
