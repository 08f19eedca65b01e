// Acceptance run: one PASS/FAIL/SKIP line per criterion, exit code 1 if any
// criterion fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "qroute/qroute.hpp"

using namespace qroute;

namespace {

enum class Status { kPass, kFail, kSkip };

struct Outcome {
  Status status;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Bits bits_of(std::uint64_t b, std::size_t n) {
  Bits s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = static_cast<std::uint8_t>(b >> i & 1);
  return s;
}

QuboCompiled to_compiled(const oracle::DenseQubo& d) {
  QuboCompiled q;
  q.linear = d.linear;
  q.offset = d.offset;
  for (std::size_t i = 0; i < d.linear.size(); ++i)
    for (std::size_t j = i + 1; j < d.linear.size(); ++j)
      if (d.quad[i][j] != 0.0) q.quadratic.push_back({i, j, d.quad[i][j]});
  return q;
}

const std::string kCmt01 = std::string(QROUTE_DATA_DIR) + "/CMT01.xml";

Outcome sa_ground_state() {
  const auto t0 = Clock::now();
  int hits = 0;
  for (int t = 0; t < 20; ++t) {
    std::mt19937_64 rng(1000 + t);
    const auto d = oracle::random_integer_qubo(12, -10, 10, rng);
    const auto best = oracle::exhaustive_min(12, [&](std::uint64_t b) { return d.energy(b); });
    const auto ss = simulated_annealing(to_compiled(d), {.num_reads = 200, .sweeps = 500, .seed = static_cast<std::uint64_t>(t)});
    hits += ss.first().energy == best.energy;
  }
  const double wall = since(t0);
  return {hits >= 19 && wall < 10.0 ? Status::kPass : Status::kFail, fmt("%d/20 exhaustive minima, %.2fs", hits, wall)};
}

Outcome qubo_algebra() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> coeff(-9, 9);
  int mismatches = 0;
  for (int t = 0; t < 1000; ++t) {
    auto reg = make_registry();
    reg->add_array("v", {10});
    const std::size_t used = 1 + rng() % 10;
    struct Term {
      std::vector<std::size_t> vars;
      double c;
    };
    std::vector<Term> terms;
    BinaryPolynomial p(reg);
    const int count = 1 + static_cast<int>(rng() % 30);
    for (int k = 0; k < count; ++k) {
      Term term{{}, static_cast<double>(coeff(rng))};
      const auto deg = rng() % 3;
      for (std::size_t d = 0; d < deg; ++d) term.vars.push_back(rng() % used);
      p.add_term(term.vars, term.c);
      terms.push_back(term);
    }
    const auto q = compile(p);
    for (std::uint64_t b = 0; b < 1024; ++b) {
      double direct = 0.0;
      for (const auto& term : terms) {
        bool on = true;
        for (auto v : term.vars) on = on && (b >> v & 1);
        if (on) direct += term.c;
      }
      mismatches += energy(q, bits_of(b, 10)) != direct;
    }
  }
  return {mismatches == 0 ? Status::kPass : Status::kFail,
          fmt("1000 polynomials x 1024 samples, %d mismatches", mismatches)};
}

Outcome tsp_qubo_exhaustive() {
  const auto t0 = Clock::now();
  int bad = 0, instances = 0;
  std::size_t minimizers = 0;
  for (std::size_t n : {2u, 3u}) {
    for (int t = 0; t < 10; ++t) {
      ++instances;
      std::mt19937_64 rng(3000 + 100 * n + t);
      const auto pts = oracle::random_points(n + 1, rng);
      std::vector<Point> p;
      for (const auto& [x, y] : pts) p.push_back({x, y});
      const auto d = DistanceMatrix::from_points(p, NodeOrdering::kDepotCustomers);
      TspMultipliers m;
      m.b = 700.0;
      m.a = m.b * d.max_entry() * static_cast<double>(n + 1);
      const auto c = compile(tsp_qubo_build(d, m).hamiltonian);
      const std::size_t v = c.variable_count();
      const auto best = oracle::exhaustive_min(v, [&](std::uint64_t b) { return energy(c, bits_of(b, v)); });
      const double opt = oracle::held_karp(oracle::euclidean(pts));
      std::vector<int> cluster(n);
      std::iota(cluster.begin(), cluster.end(), 0);
      bool ok = true;
      for (auto b : best.argmin) {
        ++minimizers;
        const auto dec = tsp_qubo_decode(bits_of(b, v), n, cluster);
        double len = 0.0;
        for (const auto& [i, j] : dec.arcs) len += d(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
        ok = ok && dec.valid && std::abs(len - opt) <= 1e-9 * std::max(1.0, opt);
      }
      bad += !ok;
    }
  }
  const double wall = since(t0);
  return {bad == 0 && wall < 60.0 ? Status::kPass : Status::kFail,
          fmt("%d/%d instances with all %zu minimizers optimal valid cycles, %.2fs", instances - bad, instances,
              minimizers, wall)};
}

Outcome gls_quality() {
  int exact10 = 0, within12 = 0;
  for (int t = 0; t < 10; ++t) {
    for (std::size_t n : {10u, 12u}) {
      std::mt19937_64 rng(4000 + 100 * n + t);
      const auto pts = oracle::random_points(n, rng);
      std::vector<Point> p;
      for (const auto& [x, y] : pts) p.push_back({x, y});
      const auto tour = gls_tsp(DistanceMatrix::from_points(p, NodeOrdering::kDepotCustomers),
                                {.iter_budget = 10000, .seed = static_cast<std::uint64_t>(t)});
      const double opt = oracle::held_karp(oracle::euclidean(pts));
      if (n == 10) exact10 += std::abs(tour.length - opt) <= 1e-6;
      else within12 += tour.length <= 1.02 * opt;
    }
  }
  return {exact10 >= 9 && within12 == 10 ? Status::kPass : Status::kFail,
          fmt("10 nodes: %d/10 Held-Karp optimal; 12 nodes: %d/10 within 2%%", exact10, within12)};
}

Outcome hybrid_cmt01() {
  if (!std::filesystem::exists(kCmt01)) return {Status::kSkip, "CMT01.xml not present"};
  const auto inst = load_instance(kCmt01);
  ExperimentConfig cfg;
  SeedManifest seeds(cfg.seed);
  const auto t0 = Clock::now();
  const auto run = run_pipeline(inst, Pipeline::kKMedoidsGls, cfg, seeds);
  const double wall = since(t0);
  const bool ok = run.violations.total() == 0 && run.solution.distance <= 551.0 && wall < 300.0;
  return {ok ? Status::kPass : Status::kFail,
          fmt("distance %.2f (BKS 524.61, +%.2f%%), %d violations, %.2fs", run.solution.distance,
              100.0 * (run.solution.distance / 524.61 - 1.0), run.violations.total(), wall)};
}

Outcome kmedoids_cmt01() {
  if (!std::filesystem::exists(kCmt01)) return {Status::kSkip, "CMT01.xml not present"};
  const auto inst = load_instance(kCmt01);
  const auto d = customer_distance_matrix(inst);
  const ExperimentConfig cfg;
  const auto res = kmedoids_fit(d, inst.num_vehicles, inst.demands, inst.capacity, cfg.kmedoids);
  std::size_t nonempty = 0;
  for (int k = 0; k < res.assignment.num_clusters; ++k) nonempty += !res.assignment.members(k).empty();
  const int errors = count_demand_errors(res.assignment, inst.capacity);
  const double sil = silhouette_score(res.assignment.labels, d);
  const bool ok = nonempty == 5 && errors == 0 && sil >= 0.30 && res.iterations <= 10;
  return {ok ? Status::kPass : Status::kFail,
          fmt("%zu clusters, %d demand errors, silhouette %.4f, %d iterations", nonempty, errors, sil,
              res.iterations)};
}

Outcome clustering_census() {
  const auto a = clustering_variable_count(50, 5, 160, 3);
  const auto b = clustering_variable_count(120, 7, 200, 2);
  return {a == 515 && b == 1540 ? Status::kPass : Status::kFail,
          fmt("CMT01 %zu (want 515), CMT11 %zu (want 1540)", a, b)};
}

Outcome full_census() {
  const auto c = variable_census(6, 2, 50);
  std::size_t subsets = 0;
  for (std::uint32_t mask = 0; mask < 64; ++mask) {
    const auto s = static_cast<std::size_t>(std::popcount(mask));
    if (s >= 2) subsets += s - 1;
  }
  const std::size_t decision = 8 * 8 * 2, capacity = 2 * 49;
  const bool ok = c.subtour_slack == 129 && subsets == 129 && c.decision == decision &&
                  c.capacity_slack == capacity && c.total() == decision + capacity + 129;
  return {ok ? Status::kPass : Status::kFail,
          fmt("decision %zu, capacity slack %zu, subtour slack %zu, total %zu", c.decision, c.capacity_slack,
              c.subtour_slack, c.total())};
}

Outcome full_toy() {
  const auto t0 = Clock::now();
  int hits = 0;
  for (int s = 0; s < 10; ++s) {
    std::mt19937_64 rng(900 + s);
    const auto pts = oracle::random_points(4, rng);
    Instance inst;
    inst.depot_coord = {pts[0].first, pts[0].second};
    for (int i = 1; i < 4; ++i) {
      inst.customer_coords.push_back({pts[static_cast<std::size_t>(i)].first, pts[static_cast<std::size_t>(i)].second});
      inst.demands.push_back(1 + static_cast<int>(rng() % 3));
    }
    inst.capacity = 10;
    inst.num_vehicles = 1;
    FullSolveParams p;
    p.anneal = {.num_reads = 10000, .sweeps = 100, .seed = static_cast<std::uint64_t>(s)};
    const auto res = solve_full(inst, p, CvrpMultipliers::defaults_for(inst));
    const double best = oracle::brute_force_route(oracle::euclidean(pts));
    hits += res.violations.total() == 0 && std::abs(res.solution.distance - best) <= 1e-6 * best;
  }
  return {hits >= 8 ? Status::kPass : Status::kFail,
          fmt("%d/10 seeds feasible and brute-force optimal (10^4 reads x 100 sweeps), %.1fs", hits, since(t0))};
}

// Random feasible solution whose first route has at least three customers.
struct Feasible {
  std::vector<int> demands;
  long long capacity = 0;
  RoutedSolution sol;
};

Feasible random_feasible(std::mt19937_64& rng) {
  Feasible f;
  const int n = 4 + static_cast<int>(rng() % 11);
  for (int i = 0; i < n; ++i) f.demands.push_back(1 + static_cast<int>(rng() % 9));
  f.capacity = 27 + static_cast<long long>(rng() % 20);
  f.sol = rng() & 1 ? RoutedSolution::open(static_cast<std::size_t>(n)) : RoutedSolution::closed();
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 1);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> path{0};
  long long load = 0;
  auto flush = [&] {
    path.push_back(f.sol.end_depot);
    f.sol.routes.push_back(path_to_arcs(path));
    path.assign(1, 0);
    load = 0;
  };
  for (int c : order) {
    const int d = f.demands[static_cast<std::size_t>(c - 1)];
    const bool first_short = f.sol.routes.empty() && path.size() < 4;
    if (!first_short && (load + d > f.capacity || (path.size() > 1 && rng() % 4 == 0))) flush();
    path.push_back(c);
    load += d;
  }
  flush();
  return f;
}

Outcome validator_completeness() {
  struct Category {
    const char* name;
    std::function<void(Feasible&)> seed;
    std::function<int(const ViolationReport&)> count;
  };
  auto first_customer = [](const Feasible& f) { return f.sol.routes[0][0].second; };
  const std::vector<Category> categories{
      {"visit", [&](Feasible& f) { f.sol.routes.push_back(path_to_arcs({0, first_customer(f), f.sol.end_depot})); },
       [](const ViolationReport& r) { return r.visit_errors; }},
      {"start", [](Feasible& f) { f.sol.routes[0].erase(f.sol.routes[0].begin()); },
       [](const ViolationReport& r) { return r.missing_start; }},
      {"dead-end", [&](Feasible& f) { f.sol.routes[0].push_back({first_customer(f), f.sol.end_depot}); },
       [](const ViolationReport& r) { return r.dead_ends; }},
      {"departure", [&](Feasible& f) { f.sol.routes[0].push_back({0, first_customer(f)}); },
       [](const ViolationReport& r) { return r.impossible_departures; }},
      {"end", [](Feasible& f) { f.sol.routes[0].pop_back(); }, [](const ViolationReport& r) { return r.missing_end; }},
      {"loop",
       [](Feasible& f) {
         std::vector<int> path{0};
         for (const auto& arc : f.sol.routes[0]) path.push_back(arc.second);
         const std::vector<int> cycle(path.begin() + 2, path.end() - 1);
         Route r = path_to_arcs({0, path[1], f.sol.end_depot});
         for (std::size_t i = 0; i < cycle.size(); ++i) r.emplace_back(cycle[i], cycle[(i + 1) % cycle.size()]);
         f.sol.routes[0] = r;
       },
       [](const ViolationReport& r) { return r.disconnected_loops; }},
      {"capacity",
       [](Feasible& f) {
         const auto loads = route_loads(f.sol, f.demands);
         f.capacity = *std::max_element(loads.begin(), loads.end()) - 1;
       },
       [](const ViolationReport& r) { return r.capacity_excess; }},
  };
  std::mt19937_64 rng(10);
  int false_positives = 0, misses = 0;
  std::string missed;
  for (int t = 0; t < 100; ++t) {
    const auto f = random_feasible(rng);
    false_positives += check_solution(f.sol, f.demands, f.capacity).total() != 0;
    for (const auto& c : categories) {
      auto g = f;
      c.seed(g);
      if (c.count(check_solution(g.sol, g.demands, g.capacity)) == 0) {
        ++misses;
        missed = c.name;
      }
    }
  }
  return {false_positives == 0 && misses == 0 ? Status::kPass : Status::kFail,
          fmt("7 categories x 100 seeded defects: %d missed%s%s; %d false positives on 100 feasible", misses,
              misses ? ", last " : "", missed.c_str(), false_positives)};
}

Outcome dip_test() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<Point> disk;
  while (disk.size() < 1000) {
    const double x = u(rng), y = u(rng);
    if (x * x + y * y <= 1) disk.push_back({x, y});
  }
  std::normal_distribution<double> g(0, 1);
  std::vector<Point> blobs;
  for (int i = 0; i < 1000; ++i) blobs.push_back({g(rng) + (i % 2 ? 20.0 : 0.0), g(rng)});
  const auto a = dip_clusterability(disk, 1000, 7);
  const auto b = dip_clusterability(blobs, 1000, 7);
  return {a.p_value > 0.05 && b.p_value < 0.01 ? Status::kPass : Status::kFail,
          fmt("uniform disk dip %.6f p %.3f; two Gaussians dip %.6f p %.3f; %.1fs", a.dip, a.p_value, b.dip,
              b.p_value, since(t0))};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

template <class Row>
bool header_matches(const char* file) {
  return csv_string(std::vector<Row>{}) == slurp(std::filesystem::path(QROUTE_GOLDEN_DIR) / file);
}

Outcome schemas() {
  int ok = 0;
  ok += header_matches<SummaryRow>("summary_header.csv");
  ok += header_matches<ClusterGridRow>("grid_cluster_header.csv");
  ok += header_matches<RouteGridRow>("grid_route_header.csv");
  ok += header_matches<ReadsRow>("reads_sweep_header.csv");

  SolutionRecord r;
  r.instance = "toy";
  r.pipeline = "hybrid-kmedoids-gls";
  r.seed = 7;
  r.solution.routes = {path_to_arcs({0, 1, 2, 0}), {}};
  r.solution.distance = 12.5;
  r.violations.capacity_excess = 1;
  const auto text = solution_json_string(r);
  ok += text == slurp(std::filesystem::path(QROUTE_GOLDEN_DIR) / "solution_skeleton.json");
  const auto back = solution_from_json(nlohmann::json::parse(text), 2);
  ok += back.solution.routes == r.solution.routes && back.violations == r.violations && back.seed == r.seed &&
        back.solution.distance == r.solution.distance && solution_json_string(back) == text;

  const std::vector<SummaryRow> s{{"CMT01", 50, 5, 0.37, 0, 537.3712}, {"a,\"b\"", 3, 1, 1.0, 2, 1e-3}};
  const std::vector<ClusterGridRow> c{{"CMT01", 50000, 20, 0, 1, 0.3295}};
  const std::vector<RouteGridRow> g{{"CMT01", 150, 700, 0, 593.98}};
  const std::vector<ReadsRow> rd{{"CMT01", 50, 5, 10000, 12.5, 0, 593.98}};
  auto rt = [](const auto& rows) {
    using Row = typename std::decay_t<decltype(rows)>::value_type;
    std::istringstream in(csv_string(rows));
    return read_csv<Row>(in) == rows;
  };
  ok += rt(s) && rt(c) && rt(g) && rt(rd);
  return {ok == 7 ? Status::kPass : Status::kFail, fmt("%d/7 schema checks (4 headers, JSON bytes, JSON and CSV round trips)", ok)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"SA ground state", sa_ground_state},
      {"QUBO algebra", qubo_algebra},
      {"TSP QUBO exhaustive", tsp_qubo_exhaustive},
      {"GLS quality", gls_quality},
      {"hybrid CMT01", hybrid_cmt01},
      {"K-Medoids CMT01", kmedoids_cmt01},
      {"clustering census", clustering_census},
      {"full-solver census", full_census},
      {"full-solver toy", full_toy},
      {"validator completeness", validator_completeness},
      {"dip test", dip_test},
      {"CSV/JSON schemas", schemas},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {Status::kFail, std::string("exception: ") + e.what()};
    }
    const char* tag = o.status == Status::kPass ? "PASS" : o.status == Status::kFail ? "FAIL" : "SKIP";
    failed += o.status == Status::kFail;
    std::printf("%s %2zu %s: %s\n", tag, i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
