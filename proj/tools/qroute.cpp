#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qroute/qroute.hpp"

namespace fs = std::filesystem;
using namespace qroute;

namespace {

struct Overrides {
  std::string config;
  std::vector<std::string> instances;
  std::string pipeline;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> reads;
  std::optional<std::size_t> sweeps;
  std::optional<std::size_t> gls_budget;
  bool no_timing = false;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-c,--config", o.config, "JSON experiment config");
  cmd->add_option("-i,--instance", o.instances, "instance file (VRP-REP XML or text)");
  cmd->add_option("-o,--out", o.out, "output directory");
  cmd->add_option("-s,--seed", o.seed, "base seed");
  cmd->add_option("--reads", o.reads, "annealing reads");
  cmd->add_option("--sweeps", o.sweeps, "annealing sweeps per read");
  cmd->add_option("--gls-budget", o.gls_budget, "GLS step budget");
  cmd->add_flag("--no-timing", o.no_timing, "write zero wall times (byte-reproducible output)");
}

ExperimentConfig resolve(const Overrides& o) {
  ExperimentConfig cfg = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
  if (!o.instances.empty()) cfg.instances = o.instances;
  if (!o.pipeline.empty()) cfg.pipeline = parse_pipeline(o.pipeline);
  if (!o.out.empty()) cfg.output_dir = o.out;
  if (o.seed) cfg.seed = *o.seed;
  if (o.reads) cfg.anneal.num_reads = *o.reads;
  if (o.sweeps) cfg.anneal.sweeps = *o.sweeps;
  if (o.gls_budget) cfg.gls.iter_budget = *o.gls_budget;
  if (o.no_timing) cfg.timing = false;
  apply_seed_env(cfg);
  validate_config(cfg);
  return cfg;
}

std::vector<Instance> load_all(const ExperimentConfig& cfg) {
  std::vector<Instance> out;
  for (const auto& p : cfg.instances) out.push_back(load_instance(p));
  if (cfg.pipeline == Pipeline::kFullQubo)
    for (const auto& inst : out)
      if (inst.num_customers() > cfg.full.subset_limit)
        throw SubsetLimitError(inst.name + ": " + std::to_string(inst.num_customers()) +
                               " customers exceed the full-QUBO subset limit of " +
                               std::to_string(cfg.full.subset_limit));
  return out;
}

void write_manifest(const ExperimentConfig& cfg, const SeedManifest& seeds) {
  write_text_file(fs::path(cfg.output_dir) / "seeds.json", seeds.to_json().dump(2) + "\n");
}

int cmd_solve(const Overrides& o) {
  const auto cfg = resolve(o);
  const auto instances = load_all(cfg);
  fs::create_directories(cfg.output_dir);
  SeedManifest seeds(cfg.seed);
  std::vector<SummaryRow> rows;
  for (const auto& inst : instances) {
    const auto run = run_pipeline(inst, cfg.pipeline, cfg, seeds);
    SolutionRecord rec{inst.name, std::string(pipeline_name(cfg.pipeline)), cfg.seed, run.solution,
                       run.violations, run.wall_s};
    write_text_file(fs::path(cfg.output_dir) / (inst.name + ".solution.json"), solution_json_string(rec));
    rows.push_back(summary_row(inst, run));
    std::cout << inst.name << ": distance " << format_double(run.solution.distance) << ", errors "
              << run.violations.total() << ", time " << format_time(run.wall_s) << "s\n";
  }
  append_csv(fs::path(cfg.output_dir) / "summary.csv", rows);
  write_manifest(cfg, seeds);
  return 0;
}

template <class Row, class Fn>
int run_grid(const Overrides& o, const std::string& file, Fn fn) {
  const auto cfg = resolve(o);
  const auto instances = load_all(cfg);
  fs::create_directories(cfg.output_dir);
  SeedManifest seeds(cfg.seed);
  std::vector<Row> rows;
  for (const auto& inst : instances) {
    auto part = fn(inst, cfg, seeds);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  write_text_file(fs::path(cfg.output_dir) / file, csv_string(rows));
  write_manifest(cfg, seeds);
  std::cout << "wrote " << rows.size() << " rows to " << (fs::path(cfg.output_dir) / file).string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Capacitated vehicle routing with QUBO and classical solvers"};
  app.require_subcommand(1);

  Overrides solve_o, cluster_o, route_o, reads_o;
  std::vector<double> m1, m2, ma, mb;
  std::vector<std::size_t> reads_list;

  auto* solve = app.add_subcommand("solve", "run a pipeline on each instance");
  add_common(solve, solve_o);
  solve->add_option("-p,--pipeline", solve_o.pipeline, "pipeline name")
      ->check(CLI::IsMember({"hybrid-kmedoids-gls", "hybrid-kmedoids-qubo", "hybrid-qubo-gls",
                             "hybrid-qubo-qubo", "full-qubo"}));

  auto* gc = app.add_subcommand("grid-cluster", "grid over clustering QUBO multipliers");
  add_common(gc, cluster_o);
  gc->add_option("--m1", m1, "M1 values");
  gc->add_option("--m2", m2, "M2 values");

  auto* gr = app.add_subcommand("grid-route", "grid over TSP QUBO multipliers");
  add_common(gr, route_o);
  gr->add_option("--ma", ma, "m_A values");
  gr->add_option("--mb", mb, "m_B values");

  auto* rs = app.add_subcommand("reads-sweep", "QUBO routing per number of reads");
  add_common(rs, reads_o);
  rs->add_option("--reads-list", reads_list, "read counts");

  std::size_t customers = 0, vehicles = 1;
  long long capacity = 1;
  std::optional<int> min_demand;
  bool binary_slack = false;
  auto* census = app.add_subcommand("census", "QUBO variable counts");
  census->add_option("--customers", customers, "number of customers")->required();
  census->add_option("--vehicles", vehicles, "vehicles / clusters");
  census->add_option("--capacity", capacity, "vehicle capacity");
  census->add_option("--min-demand", min_demand, "also print the clustering QUBO count");
  census->add_flag("--binary-slack", binary_slack, "binary capacity slack for the full QUBO");

  std::string sol_path, inst_path, svg_path;
  auto* render = app.add_subcommand("render", "draw a solution as SVG");
  render->add_option("--solution", sol_path, "solution JSON")->required()->check(CLI::ExistingFile);
  render->add_option("-i,--instance", inst_path, "instance file")->required()->check(CLI::ExistingFile);
  render->add_option("-o,--out", svg_path, "SVG output path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) return cmd_solve(solve_o);
    if (gc->parsed())
      return run_grid<ClusterGridRow>(cluster_o, "grid_cluster.csv", [&](const Instance& i, ExperimentConfig c,
                                                                          SeedManifest& s) {
        if (!m1.empty()) c.grid_m1 = m1;
        if (!m2.empty()) c.grid_m2 = m2;
        return grid_search_clustering(i, c, s);
      });
    if (gr->parsed())
      return run_grid<RouteGridRow>(route_o, "grid_route.csv", [&](const Instance& i, ExperimentConfig c,
                                                                    SeedManifest& s) {
        if (!ma.empty()) c.grid_ma = ma;
        if (!mb.empty()) c.grid_mb = mb;
        return grid_search_routing(i, c, s);
      });
    if (rs->parsed())
      return run_grid<ReadsRow>(reads_o, "reads_sweep.csv", [&](const Instance& i, ExperimentConfig c,
                                                                 SeedManifest& s) {
        if (!reads_list.empty()) c.reads = reads_list;
        return reads_sweep(i, c, s);
      });
    if (census->parsed()) {
      const auto c = variable_census(customers, vehicles, capacity,
                                     binary_slack ? CapacitySlack::kBinary : CapacitySlack::kUnary);
      std::cout << "full QUBO: decision " << c.decision << ", capacity slack " << c.capacity_slack
                << ", subtour slack " << c.subtour_slack << ", total " << c.total() << "\n";
      if (min_demand)
        std::cout << "clustering QUBO: "
                  << clustering_variable_count(customers, static_cast<int>(vehicles), capacity, *min_demand) << "\n";
      return 0;
    }
    if (render->parsed()) {
      const auto inst = load_instance(inst_path);
      std::ifstream in(sol_path);
      const auto rec = solution_from_json(nlohmann::json::parse(in), inst.num_customers());
      write_text_file(svg_path, render_routes_svg(rec.solution, inst));
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
