#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "qroute/full_solver.hpp"

using namespace qroute;

namespace {

Bits bits_of(std::uint64_t b, std::size_t n) {
  Bits s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = static_cast<std::uint8_t>(b >> i & 1);
  return s;
}

Instance random_instance(std::size_t n, int vehicles, int capacity, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto pts = oracle::random_points(n + 1, rng);
  Instance inst;
  inst.depot_coord = {pts[0].first, pts[0].second};
  for (std::size_t i = 1; i <= n; ++i) {
    inst.customer_coords.push_back({pts[i].first, pts[i].second});
    inst.demands.push_back(1 + static_cast<int>(rng() % 3));
  }
  inst.capacity = capacity;
  inst.num_vehicles = vehicles;
  return inst;
}

// Greedy fill from the largest weight; exact for weights 1..m.
void set_slack(Bits& s, const SlackEncoding& enc, double value) {
  for (std::size_t l = enc.weights.size(); l-- > 0;)
    if (enc.weights[l] <= value + 1e-9) {
      s[enc.offset + l] = 1;
      value -= enc.weights[l];
    }
  ASSERT_NEAR(value, 0.0, 1e-9);
}

/// Sample for the given per-vehicle paths (global ids, end depot |C|+1) with
/// every slack at its certifying value.
Bits feasible_sample(const CvrpQubo& q, const std::vector<std::vector<int>>& paths) {
  Bits s(q.census.total(), 0);
  const std::size_t n = q.num_customers;
  for (std::size_t k = 0; k < paths.size(); ++k) {
    double load = 0;
    for (std::size_t p = 0; p + 1 < paths[k].size(); ++p) {
      const auto i = static_cast<std::size_t>(paths[k][p]), j = static_cast<std::size_t>(paths[k][p + 1]);
      s[q.index(i, j, k)] = 1;
      if (i >= 1 && i <= n && j >= 1 && j <= n) load += q.demands[i - 1];
    }
    set_slack(s, q.capacity_slack[k], static_cast<double>(q.capacity) - load);
  }
  for (std::size_t t = 0; t < q.subsets.size(); ++t) {
    double inside = 0;
    for (const auto& path : paths)
      for (std::size_t p = 0; p + 1 < path.size(); ++p) {
        const int a = path[p] - 1, b = path[p + 1] - 1;
        if (a >= 0 && b >= 0 && a < static_cast<int>(n) && b < static_cast<int>(n) && (q.subsets[t] >> a & 1u) &&
            (q.subsets[t] >> b & 1u))
          inside += 1;
      }
    set_slack(s, q.subtour_slack[t], std::popcount(q.subsets[t]) - 1 - inside);
  }
  return s;
}

}  // namespace

TEST(Census, SixCustomersTwoVehicles) {
  const auto c = variable_census(6, 2, 50);
  EXPECT_EQ(c.decision, 128u);
  EXPECT_EQ(c.capacity_slack, 98u);
  EXPECT_EQ(c.subtour_slack, 129u);
  EXPECT_EQ(c.total(), 355u);
}

TEST(Census, EdgeCasesAndMonotone) {
  EXPECT_EQ(variable_census(0, 3, 1), (VariableCensus{12, 0, 0}));
  const auto three = variable_census(3, 1, 1);
  EXPECT_EQ(three.decision, 25u);
  EXPECT_EQ(three.subtour_slack, 5u);
  for (std::size_t n = 0; n < 8; ++n) {
    EXPECT_LT(variable_census(n, 2, 10).total(), variable_census(n + 1, 2, 10).total());
    EXPECT_LT(variable_census(n, 2, 10).total(), variable_census(n, 3, 10).total());
    EXPECT_LE(variable_census(n, 2, 10).total(), variable_census(n, 2, 11).total());
  }
  EXPECT_EQ(variable_census(6, 2, 50, CapacitySlack::kBinary).capacity_slack, 12u);
}

TEST(Census, SubtourCountMatchesBinomialSum) {
  for (std::size_t n = 0; n <= 12; ++n) {
    std::size_t expect = 0;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
      const auto s = static_cast<std::size_t>(std::popcount(mask));
      if (s >= 2) expect += s - 1;
    }
    EXPECT_EQ(variable_census(n, 1, 5).subtour_slack, expect) << n;
  }
}

TEST(Build, CensusMatchesRegistry) {
  const auto inst = random_instance(4, 2, 7, 1);
  for (auto enc : {CapacitySlack::kUnary, CapacitySlack::kBinary}) {
    const auto q = cvrp_qubo_build(inst, CvrpMultipliers::defaults_for(inst), 12, enc);
    EXPECT_EQ(q.hamiltonian.registry()->total_count(), q.census.total());
    EXPECT_EQ(q.subsets.size(), 11u);
  }
}

TEST(Build, RefusesAboveSubsetLimit) {
  const auto inst = random_instance(13, 2, 50, 2);
  try {
    cvrp_qubo_build(inst, CvrpMultipliers::defaults_for(inst));
    FAIL() << "expected SubsetLimitError";
  } catch (const SubsetLimitError& e) {
    EXPECT_NE(std::string(e.what()).find("exponential"), std::string::npos);
  }
  EXPECT_NO_THROW(cvrp_qubo_build(random_instance(3, 1, 5, 2), CvrpMultipliers::defaults_for(inst), 3));
  EXPECT_THROW(cvrp_qubo_build(random_instance(4, 1, 5, 2), CvrpMultipliers::defaults_for(inst), 3),
               SubsetLimitError);
}

TEST(Residuals, AuditMatchesEnergy) {
  const auto inst = random_instance(3, 2, 6, 3);
  CvrpMultipliers m{0.5, 3, 5, 7, 11, 13, 17};
  const auto q = cvrp_qubo_build(inst, m);
  const auto c = compile(q.hamiltonian);
  std::mt19937_64 rng(4);
  for (int t = 0; t < 300; ++t) {
    Bits s(c.variable_count());
    const auto density = 1 + rng() % 6;
    for (auto& b : s) b = rng() % density == 0;
    const double e = energy(c, s);
    EXPECT_NEAR(cvrp_residuals(q, s).energy(m), e, 1e-6 * std::max(1.0, std::abs(e)));
  }
}

TEST(Residuals, FeasibleSolutionEnergyIsDistance) {
  const auto inst = random_instance(3, 1, 10, 5);
  CvrpMultipliers m = CvrpMultipliers::defaults_for(inst);
  m.cost = 2.0;
  const auto q = cvrp_qubo_build(inst, m);
  const auto s = feasible_sample(q, {{0, 2, 1, 3, 4}});
  const auto r = cvrp_residuals(q, s);
  EXPECT_EQ(r.c1 + r.c2 + r.c3 + r.c4 + r.c5 + r.c6, 0.0);
  const auto sol = cvrp_qubo_decode(s, 3, 1);
  EXPECT_EQ(check_solution(sol, inst).total(), 0);
  EXPECT_NEAR(energy(compile(q.hamiltonian), s), 2.0 * total_distance(sol, q.distances), 1e-6);
}

TEST(Residuals, TwoVehicleFeasibleSolution) {
  const auto inst = random_instance(4, 2, 8, 6);
  const auto q = cvrp_qubo_build(inst, CvrpMultipliers::defaults_for(inst));
  const auto s = feasible_sample(q, {{0, 1, 3, 5}, {0, 4, 2, 5}});
  const auto r = cvrp_residuals(q, s);
  EXPECT_EQ(r.c1 + r.c2 + r.c3 + r.c4 + r.c5 + r.c6, 0.0);
  EXPECT_NEAR(r.cost, total_distance(cvrp_qubo_decode(s, 4, 2), q.distances), 1e-9);
}

TEST(GroundState, TwoCustomersOneVehicle) {
  for (std::uint64_t seed = 10; seed < 13; ++seed) {
    Instance inst = random_instance(2, 1, 2, seed);
    inst.demands = {1, 1};
    const auto q = cvrp_qubo_build(inst, CvrpMultipliers::defaults_for(inst));
    const auto c = compile(q.hamiltonian);
    ASSERT_EQ(c.variable_count(), 18u);
    const auto best = oracle::exhaustive_min(18, [&](std::uint64_t b) { return energy(c, bits_of(b, 18)); });
    const auto d = full_distance_matrix(inst);
    const double shortest = std::min(d(0, 1) + d(1, 2) + d(2, 3), d(0, 2) + d(2, 1) + d(1, 3));
    EXPECT_NEAR(best.energy, shortest, 1e-6);
    for (auto b : best.argmin) {
      const auto sol = cvrp_qubo_decode(bits_of(b, 18), 2, 1);
      EXPECT_EQ(check_solution(sol, inst).total(), 0);
      auto arcs = sol.routes[0];
      std::sort(arcs.begin(), arcs.end());
      EXPECT_TRUE(arcs == (Route{{0, 1}, {1, 2}, {2, 3}}) || arcs == (Route{{0, 2}, {1, 3}, {2, 1}}));
    }
  }
}

TEST(Decode, Fidelity) {
  EXPECT_EQ(cvrp_qubo_decode(Bits(50, 0), 3, 2).routes, (std::vector<Route>(2)));
  const auto inst = random_instance(3, 2, 10, 7);
  const auto q = cvrp_qubo_build(inst, CvrpMultipliers::defaults_for(inst));
  Bits s(q.census.total(), 0);
  s[q.index(0, 1, 0)] = s[q.index(1, 4, 0)] = 1;
  s[q.index(0, 2, 1)] = s[q.index(2, 3, 1)] = s[q.index(3, 2, 1)] = s[q.index(3, 4, 1)] = 1;
  const auto sol = cvrp_qubo_decode(s, 3, 2);
  EXPECT_EQ(sol.end_depot, 4);
  EXPECT_EQ(sol.routes[0], (Route{{0, 1}, {1, 4}}));
  EXPECT_EQ(sol.routes[1], (Route{{0, 2}, {2, 3}, {3, 2}, {3, 4}}));
  EXPECT_GT(check_solution(sol, inst).total(), 0);
}

TEST(Solve, ToyInstanceReachesBruteForceOptimum) {
  const auto inst = random_instance(3, 1, 10, 900);
  FullSolveParams p;
  p.anneal = {.num_reads = 2000, .sweeps = 100, .seed = 1};
  const auto res = solve_full(inst, p, CvrpMultipliers::defaults_for(inst));
  std::vector<std::pair<double, double>> pts{{inst.depot_coord.x, inst.depot_coord.y}};
  for (const auto& c : inst.customer_coords) pts.emplace_back(c.x, c.y);
  EXPECT_EQ(res.violations.total(), 0);
  EXPECT_NEAR(res.solution.distance, oracle::brute_force_route(oracle::euclidean(pts)), 1e-6);
}

TEST(Solve, StarvedPenaltiesLeaveCustomersUnvisited) {
  const auto inst = random_instance(3, 1, 10, 8);
  CvrpMultipliers m{1.0, 1e-3, 1e-3, 1e-3, 1e-3, 1e-3, 1e-3};
  FullSolveParams p;
  p.anneal = {.num_reads = 50, .sweeps = 100, .seed = 2};
  EXPECT_GE(solve_full(inst, p, m).violations.visit_errors, 1);
}

TEST(Solve, DeterministicAndDecompositionRuns) {
  const auto inst = random_instance(3, 1, 10, 9);
  const auto m = CvrpMultipliers::defaults_for(inst);
  FullSolveParams p;
  p.anneal = {.num_reads = 100, .sweeps = 100, .seed = 3};
  const auto a = solve_full(inst, p, m), b = solve_full(inst, p, m);
  EXPECT_EQ(a.solution.routes, b.solution.routes);
  EXPECT_EQ(a.energy, b.energy);
  p.sampler = FullSampler::kDecomposition;
  p.subsize = 20;
  p.rounds = 20;
  const auto d = solve_full(inst, p, m);
  EXPECT_EQ(d.solution.routes.size(), 1u);
}
