#pragma once

// Capacity-aware clustering of customers: K-Medoids with a load penalty and
// the QUBO clustering formulation, plus cluster quality metrics.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qroute/instance_io.hpp"
#include "qroute/qubo_model.hpp"

namespace qroute {

inline constexpr int kUnassigned = -1;

struct ClusterAssignment {
  std::vector<int> labels;  // per customer, kUnassigned when none
  int num_clusters = 0;
  std::vector<long long> loads;
  std::vector<int> medoids;  // K-Medoids only

  /// Customer indices of cluster k, ascending.
  std::vector<int> members(int k) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == k) out.push_back(static_cast<int>(i));
    return out;
  }

  std::size_t unassigned() const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), kUnassigned));
  }
};

inline std::vector<long long> cluster_loads(const std::vector<int>& labels, int k,
                                            const std::vector<int>& demands) {
  std::vector<long long> loads(static_cast<std::size_t>(k), 0);
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] >= 0 && labels[i] < k) loads[static_cast<std::size_t>(labels[i])] += demands[i];
  return loads;
}

inline ClusterAssignment make_assignment(std::vector<int> labels, int k,
                                         const std::vector<int>& demands) {
  ClusterAssignment a;
  a.loads = cluster_loads(labels, k, demands);
  a.labels = std::move(labels);
  a.num_clusters = k;
  return a;
}

inline int count_demand_errors(const ClusterAssignment& a, long long capacity) {
  return static_cast<int>(std::count_if(a.loads.begin(), a.loads.end(),
                                        [&](long long l) { return l > capacity; }));
}

// ---------------------------------------------------------------------------
// K-Medoids

enum class MedoidCostModel {
  kMedoidDistance,   // sum of member-to-medoid distances, +P once per overloaded cluster
  kPairwiseAbsLoad,  // sum of all ordered member pairs, +P * |Q - load| always
};

struct KMedoidsOptions {
  int max_iters = 200;
  double penalty = 10000.0;
  MedoidCostModel cost_model = MedoidCostModel::kMedoidDistance;
};

struct KMedoidsResult {
  ClusterAssignment assignment;
  int iterations = 0;
  double cost = 0.0;
  std::vector<double> accepted_costs;  // cost after each accepted swap
};

namespace detail {

struct MedoidEval {
  std::vector<int> labels;
  double cost;
};

inline MedoidEval evaluate_medoids(const DistanceMatrix& dist, const std::vector<int>& medoids,
                                   const std::vector<int>& demands, long long capacity,
                                   const KMedoidsOptions& opt) {
  const std::size_t n = dist.size();
  const std::size_t k = medoids.size();
  MedoidEval ev{std::vector<int>(n, 0), 0.0};
  std::vector<double> cost(k, 0.0);
  std::vector<long long> load(k, 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < k; ++c)
      if (dist(i, static_cast<std::size_t>(medoids[c])) < dist(i, static_cast<std::size_t>(medoids[best]))) best = c;
    ev.labels[i] = static_cast<int>(best);
    load[best] += demands[i];
    if (opt.cost_model == MedoidCostModel::kMedoidDistance)
      cost[best] += dist(i, static_cast<std::size_t>(medoids[best]));
  }
  if (opt.cost_model == MedoidCostModel::kPairwiseAbsLoad) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (ev.labels[i] == ev.labels[j]) cost[static_cast<std::size_t>(ev.labels[i])] += dist(i, j);
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (opt.cost_model == MedoidCostModel::kMedoidDistance) {
      if (load[c] > capacity) cost[c] += opt.penalty;
    } else if (load[c] > 0) {
      cost[c] += std::abs(static_cast<double>(capacity - load[c])) * opt.penalty;
    }
    ev.cost += cost[c];
  }
  return ev;
}

}  // namespace detail

/// Partitioning around medoids seeded with the k highest-demand customers.
/// `dist` is the customer-only matrix.
inline KMedoidsResult kmedoids_fit(const DistanceMatrix& dist, int k, const std::vector<int>& demands,
                                   long long capacity, const KMedoidsOptions& opt = {}) {
  const auto n = static_cast<int>(dist.size());
  if (k < 1) throw std::invalid_argument("k must be at least 1");
  if (k > n) throw std::invalid_argument("k exceeds the number of points");
  if (static_cast<int>(demands.size()) != n) throw std::invalid_argument("demand/matrix size mismatch");
  if (!(opt.penalty > 0.0)) throw std::invalid_argument("penalty must be positive");

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return demands[static_cast<std::size_t>(a)] > demands[static_cast<std::size_t>(b)]; });
  std::vector<int> medoids(order.begin(), order.begin() + k);

  KMedoidsResult res;
  auto current = detail::evaluate_medoids(dist, medoids, demands, capacity, opt);
  std::vector<char> is_medoid(static_cast<std::size_t>(n), 0);
  for (int m : medoids) is_medoid[static_cast<std::size_t>(m)] = 1;

  bool run = true;
  while (run) {
    bool swapped = false;
    for (int slot = 0; slot < k; ++slot) {
      for (int cand = 0; cand < n; ++cand) {
        if (is_medoid[static_cast<std::size_t>(cand)]) continue;
        auto trial = medoids;
        trial[static_cast<std::size_t>(slot)] = cand;
        auto ev = detail::evaluate_medoids(dist, trial, demands, capacity, opt);
        if (ev.cost < current.cost) {
          is_medoid[static_cast<std::size_t>(medoids[static_cast<std::size_t>(slot)])] = 0;
          is_medoid[static_cast<std::size_t>(cand)] = 1;
          medoids = std::move(trial);
          current = std::move(ev);
          res.accepted_costs.push_back(current.cost);
          swapped = true;
        }
      }
    }
    ++res.iterations;
    if (res.iterations >= opt.max_iters || !swapped) run = false;
  }
  res.assignment = make_assignment(std::move(current.labels), k, demands);
  res.assignment.medoids = medoids;
  res.cost = current.cost;
  return res;
}

// ---------------------------------------------------------------------------
// QUBO clustering

struct ClusteringMultipliers {
  double m1 = 50000.0;  // one-cluster-per-customer
  double m2 = 20.0;     // cluster load
  double m3 = 200.0;    // intra-cluster distance
};

struct ClusteringQubo {
  BinaryPolynomial hamiltonian;
  std::size_t num_customers = 0;
  int num_clusters = 0;
  std::size_t slack_bits_per_cluster = 0;

  std::size_t assignment_index(std::size_t customer, int cluster) const {
    return customer * static_cast<std::size_t>(num_clusters) + static_cast<std::size_t>(cluster);
  }
};

inline std::size_t clustering_slack_bits(long long capacity, int min_demand) {
  if (capacity <= 1) return 0;
  return static_cast<std::size_t>((capacity - 1 + min_demand - 1) / min_demand);
}

inline std::size_t clustering_variable_count(std::size_t n, int k, long long capacity, int min_demand) {
  return n * static_cast<std::size_t>(k) + static_cast<std::size_t>(k) * clustering_slack_bits(capacity, min_demand);
}

/// H = M3 * sum_k sum_{i<j} d_ij x_ik x_jk
///   + M1 * sum_i (sum_k x_ik - 1)^2
///   + M2 * sum_k (sum_i d_i x_ik - Q + slack_k)^2
/// with slack_k unary over (Q-1) in steps of the smallest demand.
inline ClusteringQubo qubo_clustering_build(const DistanceMatrix& dist, int k,
                                            const std::vector<int>& demands, long long capacity,
                                            const ClusteringMultipliers& mult = {}) {
  const std::size_t n = dist.size();
  if (k < 1) throw std::invalid_argument("k must be at least 1");
  if (demands.size() != n) throw std::invalid_argument("demand/matrix size mismatch");
  if (n == 0) throw std::invalid_argument("no customers");
  const int dmin = *std::min_element(demands.begin(), demands.end());
  if (dmin < 1) throw std::invalid_argument("demands must be at least 1");

  auto reg = make_registry();
  const std::size_t x0 = reg->add_array("x", {n, static_cast<std::size_t>(k)});
  const auto K = static_cast<std::size_t>(k);
  auto x = [&](std::size_t i, std::size_t c) { return x0 + i * K + c; };

  BinaryPolynomial distance_term(reg);
  for (std::size_t c = 0; c < K; ++c)
    for (std::size_t i = 0; i + 1 < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        distance_term.add_term({x(i, c), x(j, c)}, mult.m3 * dist(i, j));

  BinaryPolynomial assign_term(reg);
  for (std::size_t i = 0; i < n; ++i) {
    BinaryPolynomial row = BinaryPolynomial::constant(reg, -1.0);
    for (std::size_t c = 0; c < K; ++c) row.add_term({x(i, c)}, 1.0);
    assign_term += poly_square(row);
  }

  const std::size_t bits = clustering_slack_bits(capacity, dmin);
  BinaryPolynomial load_term(reg);
  for (std::size_t c = 0; c < K; ++c) {
    BinaryPolynomial load = BinaryPolynomial::constant(reg, -static_cast<double>(capacity));
    for (std::size_t i = 0; i < n; ++i) load.add_term({x(i, c)}, demands[i]);
    if (bits > 0)
      load += add_slack_unary(reg, "slack_" + std::to_string(c), static_cast<double>(capacity - 1), dmin).form;
    load_term += poly_square(load);
  }

  BinaryPolynomial h = distance_term + mult.m1 * assign_term + mult.m2 * load_term;
  return {std::move(h), n, k, bits};
}

struct ClusterDecode {
  ClusterAssignment assignment;
  std::vector<int> multiply_assigned;  // customers with more than one bit set
};

/// Lowest cluster index wins when a row has several bits set.
inline ClusterDecode qubo_clustering_decode(std::span<const std::uint8_t> sample, std::size_t n, int k,
                                            const std::vector<int>& demands) {
  const auto K = static_cast<std::size_t>(k);
  if (sample.size() < n * K) throw std::invalid_argument("sample shorter than assignment block");
  ClusterDecode out;
  std::vector<int> labels(n, kUnassigned);
  for (std::size_t i = 0; i < n; ++i) {
    int set = 0;
    for (std::size_t c = 0; c < K; ++c) {
      if (!sample[i * K + c]) continue;
      if (set++ == 0) labels[i] = static_cast<int>(c);
    }
    if (set > 1) out.multiply_assigned.push_back(static_cast<int>(i));
  }
  out.assignment = make_assignment(std::move(labels), k, demands);
  return out;
}

// ---------------------------------------------------------------------------
// Silhouette

/// Mean of (b - a) / max(a, b) over assigned points. Singleton clusters and
/// max(a, b) == 0 contribute 0.
inline double silhouette_score(const std::vector<int>& labels, const DistanceMatrix& dist) {
  const std::size_t n = labels.size();
  if (dist.size() != n) throw std::invalid_argument("label/matrix size mismatch");
  int k = 0;
  for (int l : labels) k = std::max(k, l + 1);
  std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
  for (int l : labels)
    if (l >= 0) ++sizes[static_cast<std::size_t>(l)];
  const auto nonempty = std::count_if(sizes.begin(), sizes.end(), [](std::size_t s) { return s > 0; });
  if (nonempty < 2) throw std::invalid_argument("silhouette needs at least two non-empty clusters");

  double sum = 0.0;
  std::size_t counted = 0;
  std::vector<double> acc(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] < 0) continue;
    ++counted;
    const auto own = static_cast<std::size_t>(labels[i]);
    if (sizes[own] == 1) continue;
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j)
      if (j != i && labels[j] >= 0) acc[static_cast<std::size_t>(labels[j])] += dist(i, j);
    const double a = acc[own] / static_cast<double>(sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < acc.size(); ++c)
      if (c != own && sizes[c] > 0) b = std::min(b, acc[c] / static_cast<double>(sizes[c]));
    const double denom = std::max(a, b);
    if (denom > 0.0) sum += (b - a) / denom;
  }
  return sum / static_cast<double>(counted);
}

}  // namespace qroute
