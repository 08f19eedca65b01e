#pragma once

// Experiment harness: configuration, pipelines, CSV/JSON artifacts, grids,
// seed manifest and SVG rendering.

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "qroute/clustering.hpp"
#include "qroute/full_solver.hpp"
#include "qroute/instance_io.hpp"
#include "qroute/parallel.hpp"
#include "qroute/routing_classical.hpp"
#include "qroute/routing_qubo.hpp"
#include "qroute/samplers.hpp"
#include "qroute/solution.hpp"
#include "qroute/validation.hpp"

namespace qroute {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CsvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Pipelines and configuration

enum class Pipeline { kKMedoidsGls, kKMedoidsQubo, kQuboGls, kQuboQubo, kFullQubo };

inline constexpr std::array<std::pair<Pipeline, std::string_view>, 5> kPipelineNames{{
    {Pipeline::kKMedoidsGls, "hybrid-kmedoids-gls"},
    {Pipeline::kKMedoidsQubo, "hybrid-kmedoids-qubo"},
    {Pipeline::kQuboGls, "hybrid-qubo-gls"},
    {Pipeline::kQuboQubo, "hybrid-qubo-qubo"},
    {Pipeline::kFullQubo, "full-qubo"},
}};

inline std::string_view pipeline_name(Pipeline p) {
  for (const auto& [id, name] : kPipelineNames)
    if (id == p) return name;
  return "unknown";
}

inline Pipeline parse_pipeline(std::string_view name) {
  for (const auto& [id, text] : kPipelineNames)
    if (text == name) return id;
  throw ConfigError("unknown pipeline '" + std::string(name) + "'");
}

struct ExperimentConfig {
  std::vector<std::string> instances;
  Pipeline pipeline = Pipeline::kKMedoidsGls;
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  bool timing = true;

  AnnealParams anneal{.num_reads = 1000, .sweeps = 1000};
  GlsOptions gls{};
  KMedoidsOptions kmedoids{.penalty = 1.0, .cost_model = MedoidCostModel::kPairwiseAbsLoad};
  ClusteringMultipliers clustering{};
  TspMultipliers routing{.mode = TspMultiplierMode::kListingSquared, .close_cycle = false};
  FullSolveParams full{};
  std::optional<CvrpMultipliers> full_multipliers;

  std::vector<double> grid_m1{1000, 5000, 10000, 50000, 100000};
  std::vector<double> grid_m2{1, 5, 10, 20, 50};
  std::vector<double> grid_ma{50, 100, 150, 200, 300};
  std::vector<double> grid_mb{100, 300, 500, 700, 1000};
  std::vector<std::size_t> reads{10, 100, 1000};
};

namespace detail {

template <class T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

template <class T>
void read_grid(const nlohmann::json& j, const char* key, std::vector<T>& out) {
  if (!j.contains(key)) return;
  out = j.at(key).get<std::vector<T>>();
  if (out.empty()) throw ConfigError(std::string("grid '") + key + "' is empty");
}

}  // namespace detail

/// Keys absent from `j` keep their defaults.
inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  try {
    detail::read_opt(j, "instances", c.instances);
    if (j.contains("pipeline")) c.pipeline = parse_pipeline(j.at("pipeline").get<std::string>());
    detail::read_opt(j, "seed", c.seed);
    detail::read_opt(j, "output_dir", c.output_dir);
    detail::read_opt(j, "timing", c.timing);
    if (j.contains("anneal")) {
      const auto& a = j.at("anneal");
      detail::read_opt(a, "num_reads", c.anneal.num_reads);
      detail::read_opt(a, "sweeps", c.anneal.sweeps);
      detail::read_opt(a, "beta_hot", c.anneal.beta_hot);
      detail::read_opt(a, "beta_cold", c.anneal.beta_cold);
    }
    if (j.contains("gls")) {
      const auto& g = j.at("gls");
      detail::read_opt(g, "iter_budget", c.gls.iter_budget);
      detail::read_opt(g, "lambda", c.gls.lambda_coeff);
      detail::read_opt(g, "or_opt", c.gls.or_opt);
    }
    if (j.contains("kmedoids")) {
      const auto& k = j.at("kmedoids");
      detail::read_opt(k, "max_iters", c.kmedoids.max_iters);
      detail::read_opt(k, "penalty", c.kmedoids.penalty);
      if (k.contains("cost_model")) {
        const auto m = k.at("cost_model").get<std::string>();
        if (m == "medoid-distance") c.kmedoids.cost_model = MedoidCostModel::kMedoidDistance;
        else if (m == "pairwise-abs-load") c.kmedoids.cost_model = MedoidCostModel::kPairwiseAbsLoad;
        else throw ConfigError("unknown cost_model '" + m + "'");
      }
    }
    if (j.contains("clustering")) {
      const auto& m = j.at("clustering");
      detail::read_opt(m, "m1", c.clustering.m1);
      detail::read_opt(m, "m2", c.clustering.m2);
      detail::read_opt(m, "m3", c.clustering.m3);
    }
    if (j.contains("routing")) {
      const auto& r = j.at("routing");
      detail::read_opt(r, "m_a", c.routing.a);
      detail::read_opt(r, "m_b", c.routing.b);
      detail::read_opt(r, "close_cycle", c.routing.close_cycle);
      if (r.contains("mode")) {
        const auto m = r.at("mode").get<std::string>();
        if (m == "equation") c.routing.mode = TspMultiplierMode::kEquation;
        else if (m == "listing") c.routing.mode = TspMultiplierMode::kListingSquared;
        else throw ConfigError("unknown routing mode '" + m + "'");
      }
    }
    if (j.contains("full")) {
      const auto& f = j.at("full");
      if (f.contains("sampler")) {
        const auto s = f.at("sampler").get<std::string>();
        if (s == "anneal") c.full.sampler = FullSampler::kAnneal;
        else if (s == "decomposition") c.full.sampler = FullSampler::kDecomposition;
        else throw ConfigError("unknown full sampler '" + s + "'");
      }
      detail::read_opt(f, "subset_limit", c.full.subset_limit);
      detail::read_opt(f, "subsize", c.full.subsize);
      detail::read_opt(f, "rounds", c.full.rounds);
      if (f.contains("capacity_slack")) {
        const auto s = f.at("capacity_slack").get<std::string>();
        if (s == "unary") c.full.capacity_slack = CapacitySlack::kUnary;
        else if (s == "binary") c.full.capacity_slack = CapacitySlack::kBinary;
        else throw ConfigError("unknown capacity_slack '" + s + "'");
      }
      if (f.contains("multipliers")) {
        const auto& m = f.at("multipliers");
        CvrpMultipliers cm;
        detail::read_opt(m, "cost", cm.cost);
        detail::read_opt(m, "m1", cm.m1);
        detail::read_opt(m, "m2", cm.m2);
        detail::read_opt(m, "m3", cm.m3);
        detail::read_opt(m, "m4", cm.m4);
        detail::read_opt(m, "m5", cm.m5);
        detail::read_opt(m, "m6", cm.m6);
        c.full_multipliers = cm;
      }
    }
    if (j.contains("grids")) {
      const auto& g = j.at("grids");
      detail::read_grid(g, "m1", c.grid_m1);
      detail::read_grid(g, "m2", c.grid_m2);
      detail::read_grid(g, "m_a", c.grid_ma);
      detail::read_grid(g, "m_b", c.grid_mb);
      detail::read_grid(g, "reads", c.reads);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  try {
    return config_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
}

/// QROUTE_SEED overrides whatever the file and flags set.
inline void apply_seed_env(ExperimentConfig& cfg) {
  const char* env = std::getenv("QROUTE_SEED");
  if (!env || !*env) return;
  std::uint64_t v = 0;
  const std::string_view s(env);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw ConfigError("QROUTE_SEED is not an unsigned integer");
  cfg.seed = v;
}

/// Startup checks; nothing is written before these pass.
inline void validate_config(const ExperimentConfig& cfg) {
  if (cfg.instances.empty()) throw ConfigError("no instances given");
  for (const auto& p : cfg.instances)
    if (!std::filesystem::is_regular_file(p)) throw ConfigError("instance file not found: " + p);
  if (cfg.grid_m1.empty() || cfg.grid_m2.empty() || cfg.grid_ma.empty() || cfg.grid_mb.empty() ||
      cfg.reads.empty())
    throw ConfigError("grids must be nonempty");
  if (cfg.anneal.num_reads == 0) throw ConfigError("num_reads must be positive");
  for (auto r : cfg.reads)
    if (r == 0) throw ConfigError("reads grid contains 0");
}

// ---------------------------------------------------------------------------
// Seeds

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Stream seed for a named consumer, a pure function of (base, name).
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view stream) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : stream) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(base ^ h);
}

class SeedManifest {
 public:
  explicit SeedManifest(std::uint64_t base = 0) : base_(base) {}

  std::uint64_t draw(const std::string& stream) {
    const auto s = derive_seed(base_, stream);
    std::lock_guard lock(mu_);
    streams_[stream] = s;
    return s;
  }

  std::uint64_t base() const noexcept { return base_; }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["seed"] = base_;
    j["streams"] = nlohmann::ordered_json::object();
    std::lock_guard lock(mu_);
    for (const auto& [k, v] : streams_) j["streams"][k] = v;
    return j;
  }

 private:
  std::uint64_t base_;
  mutable std::mutex mu_;
  std::map<std::string, std::uint64_t> streams_;
};

// ---------------------------------------------------------------------------
// Running pipelines

struct PipelineRun {
  RoutedSolution solution;
  ViolationReport violations;
  int clusters = 0;
  double wall_s = 0.0;
};

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline ClusterAssignment qubo_cluster(const Instance& inst, const ClusteringMultipliers& mult,
                                      AnnealParams params) {
  const auto dist = customer_distance_matrix(inst);
  const auto model = qubo_clustering_build(dist, inst.num_vehicles, inst.demands, inst.capacity, mult);
  const auto samples = simulated_annealing(compile(model.hamiltonian), params);
  return qubo_clustering_decode(samples.first().sample, inst.num_customers(), inst.num_vehicles,
                                inst.demands)
      .assignment;
}

}  // namespace detail

inline PipelineRun run_pipeline(const Instance& inst, Pipeline pipeline, const ExperimentConfig& cfg,
                                SeedManifest& seeds) {
  const auto t0 = std::chrono::steady_clock::now();
  PipelineRun run;
  if (pipeline == Pipeline::kFullQubo) {
    FullSolveParams params = cfg.full;
    params.anneal = cfg.anneal;
    params.anneal.seed = seeds.draw(inst.name + "/full");
    const auto mult = cfg.full_multipliers.value_or(CvrpMultipliers::defaults_for(inst));
    auto res = solve_full(inst, params, mult);
    run.solution = std::move(res.solution);
    run.clusters = inst.num_vehicles;
  } else {
    ClusterAssignment assign;
    if (pipeline == Pipeline::kKMedoidsGls || pipeline == Pipeline::kKMedoidsQubo) {
      assign = kmedoids_fit(customer_distance_matrix(inst), inst.num_vehicles, inst.demands, inst.capacity,
                            cfg.kmedoids)
                   .assignment;
    } else {
      AnnealParams p = cfg.anneal;
      p.seed = seeds.draw(inst.name + "/clustering");
      assign = detail::qubo_cluster(inst, cfg.clustering, p);
    }
    if (pipeline == Pipeline::kKMedoidsGls || pipeline == Pipeline::kQuboGls) {
      GlsOptions g = cfg.gls;
      g.seed = seeds.draw(inst.name + "/routing");
      run.solution = route_clusters(inst, assign, g);
    } else {
      AnnealParams p = cfg.anneal;
      p.seed = seeds.draw(inst.name + "/routing");
      run.solution = qubo_route_clusters(inst, assign, p, cfg.routing).solution;
    }
    run.clusters = assign.num_clusters;
  }
  run.solution.distance = total_distance(run.solution, inst);
  run.violations = check_solution(run.solution, inst);
  run.wall_s = cfg.timing ? detail::seconds_since(t0) : 0.0;
  return run;
}

// ---------------------------------------------------------------------------
// Number formatting

/// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

inline std::string format_time(double seconds) {
  std::array<char, 64> buf{};
  std::snprintf(buf.data(), buf.size(), "%.2f", seconds);
  return buf.data();
}

inline double round_time(double seconds) { return std::round(seconds * 100.0) / 100.0; }

inline double parse_double(std::string_view s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw CsvError("bad number '" + std::string(s) + "'");
  return v;
}

template <class Int>
Int parse_int(std::string_view s) {
  Int v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw CsvError("bad integer '" + std::string(s) + "'");
  return v;
}

// ---------------------------------------------------------------------------
// CSV

namespace detail {

inline std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  if (quoted) throw CsvError("unterminated quote");
  return fields;
}

}  // namespace detail

struct SummaryRow {
  static constexpr std::string_view kHeader = "Problem,Nodes,Clusters,Time,Errors,Distance";
  std::string problem;
  std::size_t nodes = 0;
  int clusters = 0;
  double time = 0.0;
  int errors = 0;
  double distance = 0.0;

  std::vector<std::string> fields() const {
    return {problem, std::to_string(nodes), std::to_string(clusters), format_time(time), std::to_string(errors),
            format_double(distance)};
  }
  static SummaryRow parse(const std::vector<std::string>& f) {
    return {f[0], parse_int<std::size_t>(f[1]), parse_int<int>(f[2]), parse_double(f[3]), parse_int<int>(f[4]),
            parse_double(f[5])};
  }
  friend bool operator==(const SummaryRow&, const SummaryRow&) = default;
};

struct ClusterGridRow {
  static constexpr std::string_view kHeader =
      "Problem,Constraint 1,Constraint 2,Unassigned Nodes,Demand Errors,Silhouette";
  std::string problem;
  double m1 = 0.0;
  double m2 = 0.0;
  std::size_t unassigned = 0;
  int demand_errors = 0;
  double silhouette = 0.0;

  std::vector<std::string> fields() const {
    return {problem, format_double(m1), format_double(m2), std::to_string(unassigned), std::to_string(demand_errors),
            format_double(silhouette)};
  }
  static ClusterGridRow parse(const std::vector<std::string>& f) {
    return {f[0], parse_double(f[1]), parse_double(f[2]), parse_int<std::size_t>(f[3]), parse_int<int>(f[4]),
            parse_double(f[5])};
  }
  friend bool operator==(const ClusterGridRow&, const ClusterGridRow&) = default;
};

struct RouteGridRow {
  static constexpr std::string_view kHeader = "Problem,Constraint 1,Constraint 2,Errors,Distance";
  std::string problem;
  double ma = 0.0;
  double mb = 0.0;
  int errors = 0;
  double distance = 0.0;

  std::vector<std::string> fields() const {
    return {problem, format_double(ma), format_double(mb), std::to_string(errors), format_double(distance)};
  }
  static RouteGridRow parse(const std::vector<std::string>& f) {
    return {f[0], parse_double(f[1]), parse_double(f[2]), parse_int<int>(f[3]), parse_double(f[4])};
  }
  friend bool operator==(const RouteGridRow&, const RouteGridRow&) = default;
};

struct ReadsRow {
  static constexpr std::string_view kHeader = "Problem,Nodes,Vehicles,# Reads,Time,Errors,Distance";
  std::string problem;
  std::size_t nodes = 0;
  int vehicles = 0;
  std::size_t reads = 0;
  double time = 0.0;
  int errors = 0;
  double distance = 0.0;

  std::vector<std::string> fields() const {
    return {problem, std::to_string(nodes), std::to_string(vehicles), std::to_string(reads), format_time(time),
            std::to_string(errors), format_double(distance)};
  }
  static ReadsRow parse(const std::vector<std::string>& f) {
    return {f[0], parse_int<std::size_t>(f[1]), parse_int<int>(f[2]), parse_int<std::size_t>(f[3]),
            parse_double(f[4]), parse_int<int>(f[5]), parse_double(f[6])};
  }
  friend bool operator==(const ReadsRow&, const ReadsRow&) = default;
};

template <class Row>
void write_csv_rows(std::ostream& out, const std::vector<Row>& rows) {
  for (const auto& r : rows) {
    const auto f = r.fields();
    for (std::size_t i = 0; i < f.size(); ++i) out << (i ? "," : "") << detail::csv_escape(f[i]);
    out << '\n';
  }
}

template <class Row>
void write_csv(std::ostream& out, const std::vector<Row>& rows) {
  out << Row::kHeader << '\n';
  write_csv_rows(out, rows);
}

template <class Row>
std::vector<Row> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != Row::kHeader)
    throw CsvError("unexpected header, want '" + std::string(Row::kHeader) + "'");
  const auto columns = detail::csv_split(std::string(Row::kHeader)).size();
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = detail::csv_split(line);
    if (f.size() != columns) throw CsvError("row has " + std::to_string(f.size()) + " fields: " + line);
    rows.push_back(Row::parse(f));
  }
  return rows;
}

template <class Row>
std::string csv_string(const std::vector<Row>& rows) {
  std::ostringstream s;
  write_csv(s, rows);
  return s.str();
}

// ---------------------------------------------------------------------------
// Solution JSON

struct SolutionRecord {
  std::string instance;
  std::string pipeline;
  std::uint64_t seed = 0;
  RoutedSolution solution;
  ViolationReport violations;
  double wall_s = 0.0;
};

inline nlohmann::ordered_json violations_to_json(const ViolationReport& v) {
  nlohmann::ordered_json j;
  j["visit_errors"] = v.visit_errors;
  j["missing_start"] = v.missing_start;
  j["dead_ends"] = v.dead_ends;
  j["impossible_departures"] = v.impossible_departures;
  j["missing_end"] = v.missing_end;
  j["disconnected_loops"] = v.disconnected_loops;
  j["capacity_excess"] = v.capacity_excess;
  j["malformed_arcs"] = v.malformed_arcs;
  j["total"] = v.total();
  return j;
}

inline nlohmann::ordered_json solution_to_json(const SolutionRecord& r) {
  nlohmann::ordered_json j;
  j["instance"] = r.instance;
  j["pipeline"] = r.pipeline;
  j["seed"] = r.seed;
  auto routes = nlohmann::ordered_json::array();
  for (const auto& route : r.solution.routes) {
    auto arcs = nlohmann::ordered_json::array();
    for (const auto& [a, b] : route) arcs.push_back({a, b});
    routes.push_back(std::move(arcs));
  }
  j["routes"] = std::move(routes);
  j["distance"] = r.solution.distance;
  j["violations"] = violations_to_json(r.violations);
  j["wall_s"] = r.wall_s;
  return j;
}

inline std::string solution_json_string(const SolutionRecord& r) { return solution_to_json(r).dump(2) + "\n"; }

/// Inverse of solution_to_json. Depot convention: an arc touching a node
/// above every customer index marks an open solution.
inline SolutionRecord solution_from_json(const nlohmann::json& j, std::size_t num_customers) {
  try {
    SolutionRecord r;
    r.instance = j.at("instance").get<std::string>();
    r.pipeline = j.at("pipeline").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.solution = RoutedSolution::closed();
    for (const auto& route : j.at("routes")) {
      Route arcs;
      for (const auto& arc : route) {
        if (!arc.is_array() || arc.size() != 2) throw CsvError("arc must be a pair");
        arcs.emplace_back(arc[0].get<int>(), arc[1].get<int>());
        if (arcs.back().second == static_cast<int>(num_customers) + 1 ||
            arcs.back().first == static_cast<int>(num_customers) + 1)
          r.solution.end_depot = static_cast<int>(num_customers) + 1;
      }
      r.solution.routes.push_back(std::move(arcs));
    }
    r.solution.distance = j.at("distance").get<double>();
    const auto& v = j.at("violations");
    r.violations.visit_errors = v.at("visit_errors").get<int>();
    r.violations.missing_start = v.at("missing_start").get<int>();
    r.violations.dead_ends = v.at("dead_ends").get<int>();
    r.violations.impossible_departures = v.at("impossible_departures").get<int>();
    r.violations.missing_end = v.at("missing_end").get<int>();
    r.violations.disconnected_loops = v.at("disconnected_loops").get<int>();
    r.violations.capacity_excess = v.at("capacity_excess").get<int>();
    r.violations.malformed_arcs = v.at("malformed_arcs").get<int>();
    r.wall_s = j.at("wall_s").get<double>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw CsvError(std::string("malformed solution JSON: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Experiments

inline SummaryRow summary_row(const Instance& inst, const PipelineRun& run) {
  return {inst.name, inst.num_customers(), run.clusters, round_time(run.wall_s), run.violations.total(),
          run.solution.distance};
}

inline std::vector<ClusterGridRow> grid_search_clustering(const Instance& inst, const ExperimentConfig& cfg,
                                                          SeedManifest& seeds) {
  const auto dist = customer_distance_matrix(inst);
  const std::size_t cols = cfg.grid_m2.size();
  std::vector<ClusterGridRow> rows(cfg.grid_m1.size() * cols);
  std::vector<std::uint64_t> cell_seeds(rows.size());
  for (std::size_t c = 0; c < rows.size(); ++c)
    cell_seeds[c] = seeds.draw(inst.name + "/grid-cluster/" + std::to_string(c));
  parallel_for(rows.size(), [&](std::size_t c) {
    ClusteringMultipliers m = cfg.clustering;
    m.m1 = cfg.grid_m1[c / cols];
    m.m2 = cfg.grid_m2[c % cols];
    AnnealParams p = cfg.anneal;
    p.seed = cell_seeds[c];
    const auto assign = detail::qubo_cluster(inst, m, p);
    double sil = -1.0;
    try {
      sil = silhouette_score(assign.labels, dist);
    } catch (const std::invalid_argument&) {
    }
    rows[c] = {inst.name, m.m1, m.m2, assign.unassigned(), count_demand_errors(assign, inst.capacity), sil};
  });
  return rows;
}

inline std::vector<RouteGridRow> grid_search_routing(const Instance& inst, const ExperimentConfig& cfg,
                                                     SeedManifest& seeds) {
  const auto assign =
      kmedoids_fit(customer_distance_matrix(inst), inst.num_vehicles, inst.demands, inst.capacity, cfg.kmedoids)
          .assignment;
  const std::size_t cols = cfg.grid_mb.size();
  std::vector<RouteGridRow> rows(cfg.grid_ma.size() * cols);
  std::vector<std::uint64_t> cell_seeds(rows.size());
  for (std::size_t c = 0; c < rows.size(); ++c)
    cell_seeds[c] = seeds.draw(inst.name + "/grid-route/" + std::to_string(c));
  parallel_for(rows.size(), [&](std::size_t c) {
    TspMultipliers m = cfg.routing;
    m.a = cfg.grid_ma[c / cols];
    m.b = cfg.grid_mb[c % cols];
    AnnealParams p = cfg.anneal;
    p.seed = cell_seeds[c];
    const auto res = qubo_route_clusters(inst, assign, p, m);
    rows[c] = {inst.name, m.a, m.b, check_solution(res.solution, inst).total(), res.solution.distance};
  });
  return rows;
}

/// K-Medoids clusters routed by the TSP QUBO at each read count.
inline std::vector<ReadsRow> reads_sweep(const Instance& inst, const ExperimentConfig& cfg, SeedManifest& seeds) {
  const auto assign =
      kmedoids_fit(customer_distance_matrix(inst), inst.num_vehicles, inst.demands, inst.capacity, cfg.kmedoids)
          .assignment;
  std::vector<ReadsRow> rows;
  for (std::size_t r = 0; r < cfg.reads.size(); ++r) {
    AnnealParams p = cfg.anneal;
    p.num_reads = cfg.reads[r];
    p.seed = seeds.draw(inst.name + "/reads/" + std::to_string(cfg.reads[r]));
    const auto t0 = std::chrono::steady_clock::now();
    const auto res = qubo_route_clusters(inst, assign, p, cfg.routing);
    const double wall = cfg.timing ? detail::seconds_since(t0) : 0.0;
    rows.push_back({inst.name, inst.num_customers(), inst.num_vehicles, cfg.reads[r], round_time(wall),
                    check_solution(res.solution, inst).total(), res.solution.distance});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// SVG

/// Depot as a square, visited customers as circles, one line per arc.
inline std::string render_routes_svg(const RoutedSolution& sol, const Instance& inst) {
  const int n = static_cast<int>(inst.num_customers());
  auto point = [&](int v) -> std::optional<Point> {
    if (v == 0 || v == n + 1) return inst.depot_coord;
    if (v >= 1 && v <= n) return inst.customer_coords[static_cast<std::size_t>(v - 1)];
    return std::nullopt;
  };
  double lo_x = inst.depot_coord.x, hi_x = lo_x, lo_y = inst.depot_coord.y, hi_y = lo_y;
  for (const auto& p : inst.customer_coords) {
    lo_x = std::min(lo_x, p.x);
    hi_x = std::max(hi_x, p.x);
    lo_y = std::min(lo_y, p.y);
    hi_y = std::max(hi_y, p.y);
  }
  constexpr double kSize = 800.0, kMargin = 20.0;
  const double span = std::max({hi_x - lo_x, hi_y - lo_y, 1e-9});
  const double scale = (kSize - 2 * kMargin) / span;
  auto sx = [&](double x) { return format_double(kMargin + (x - lo_x) * scale); };
  auto sy = [&](double y) { return format_double(kSize - kMargin - (y - lo_y) * scale); };
  static constexpr std::array<const char*, 8> kPalette{"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                                       "#9467bd", "#8c564b", "#e377c2", "#17becf"};

  std::ostringstream s;
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"800\" viewBox=\"0 0 800 800\">\n"
    << "<rect width=\"800\" height=\"800\" fill=\"white\"/>\n";
  std::vector<char> seen(static_cast<std::size_t>(n + 2), 0);
  for (std::size_t k = 0; k < sol.routes.size(); ++k) {
    const char* color = kPalette[k % kPalette.size()];
    for (const auto& [a, b] : sol.routes[k]) {
      const auto pa = point(a), pb = point(b);
      if (!pa || !pb) continue;
      seen[static_cast<std::size_t>(a)] = seen[static_cast<std::size_t>(b)] = 1;
      s << "<line class=\"arc\" x1=\"" << sx(pa->x) << "\" y1=\"" << sy(pa->y) << "\" x2=\"" << sx(pb->x)
        << "\" y2=\"" << sy(pb->y) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    }
  }
  for (int v = 1; v <= n; ++v) {
    if (!seen[static_cast<std::size_t>(v)]) continue;
    const auto p = *point(v);
    s << "<circle class=\"customer\" cx=\"" << sx(p.x) << "\" cy=\"" << sy(p.y) << "\" r=\"4\" fill=\"black\"/>\n";
  }
  s << "<rect class=\"depot\" x=\"" << format_double(kMargin + (inst.depot_coord.x - lo_x) * scale - 6)
    << "\" y=\"" << format_double(kSize - kMargin - (inst.depot_coord.y - lo_y) * scale - 6)
    << "\" width=\"12\" height=\"12\" fill=\"red\"/>\n"
    << "</svg>\n";
  return s.str();
}

// ---------------------------------------------------------------------------
// Files

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

/// Writes header and rows, or appends rows when `path` already starts with
/// the same header.
template <class Row>
void append_csv(const std::filesystem::path& path, const std::vector<Row>& rows) {
  bool has_header = false;
  if (std::filesystem::exists(path)) {
    std::ifstream in(path);
    std::string first;
    has_header = std::getline(in, first) && first == Row::kHeader;
  }
  std::ofstream out(path, has_header ? std::ios::binary | std::ios::app : std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  if (has_header) write_csv_rows(out, rows);
  else write_csv(out, rows);
}

}  // namespace qroute
