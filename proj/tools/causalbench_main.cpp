// causalbench CLI: simulate one grid cell, run learners on a dataset,
// evaluate an estimate against a truth graph, execute a whole grid into a
// records file, and turn records into the CSV report bundle.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "causalbench/dos.hpp"
#include "causalbench/harness.hpp"

namespace fs = std::filesystem;
using namespace causalbench;

namespace {

std::vector<double> flat_row_major(const Eigen::MatrixXd& m) {
  std::vector<double> v(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      v[static_cast<std::size_t>(i) * m.cols() + j] = m(i, j);
  return v;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Accepts either an edge-list CSV (source,target,weight) or a dense 0/1
// adjacency CSV with X1..Xd header; the header decides.
Dag read_graph_file(const fs::path& path, int d_hint) {
  std::string text = slurp(path);
  std::istringstream probe(text);
  std::string header;
  if (!std::getline(probe, header))
    throw std::runtime_error(path.string() + ": empty file");
  std::istringstream is(text);
  if (header.rfind("source", 0) == 0) return read_edge_list(is, d_hint).g;
  return read_adjacency(is);
}

NodeOrder read_order_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("node", 0) != 0)
    throw std::runtime_error(path.string() + ": expected 'node' header");
  std::vector<int> seq;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    seq.push_back(detail::parse_node_label(line));
  }
  return NodeOrder::of(std::move(seq));
}

void write_order_file(const fs::path& path, const NodeOrder& order) {
  std::ofstream os(path);
  os << "node\n";
  for (int v : order.seq) os << node_label(v) << '\n';
}

ExperimentGrid grid_from_flags(const std::string& preset,
                               const std::string& config_path) {
  if (!config_path.empty()) return load_grid_config(config_path);
  if (preset == "desk") return desk_grid();
  if (preset == "full") return full_grid();
  throw std::runtime_error("unknown preset: " + preset);
}

Dataset read_dataset_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_dataset_csv(in);
}

int cmd_simulate(const std::string& preset, const std::string& config_path,
                 int cell_id, int replicate, std::uint64_t seed, bool seed_set,
                 const fs::path& out_dir) {
  ExperimentGrid grid = grid_from_flags(preset, config_path);
  if (seed_set) grid.master_seed = seed;
  auto cells = enumerate_grid(grid);
  if (cell_id < 0 || cell_id >= static_cast<int>(cells.size()))
    throw std::runtime_error("cell id out of range, grid has " +
                             std::to_string(cells.size()) + " cells");
  if (replicate < 0 || replicate >= grid.replicates)
    throw std::runtime_error("replicate out of range");
  const Cell& cell = cells[static_cast<std::size_t>(cell_id)];
  CellDraw draw = simulate_cell(grid, cell, replicate);

  fs::create_directories(out_dir);
  {
    std::ofstream os(out_dir / "dataset.csv");
    write_dataset_csv(os, draw.data);
  }
  {
    std::vector<double> w = flat_row_major(draw.weights.w);
    std::ofstream os(out_dir / "truth_edges.csv");
    write_edge_list(os, draw.truth, &w);
  }
  {
    std::ofstream os(out_dir / "truth_adjacency.csv");
    write_adjacency(os, draw.truth);
  }
  {
    SimConfig cfg;
    cfg.graph = graph_spec_for(cell.factors);
    cfg.relu_fraction = cell.factors.relu_fraction;
    cfg.w_upper = cell.factors.w_upper;
    cfg.w_lower = 0.5;
    cfg.n_full = *std::max_element(grid.sample_sizes.begin(),
                                   grid.sample_sizes.end());
    cfg.n_small = *std::min_element(grid.sample_sizes.begin(),
                                    grid.sample_sizes.end());
    cfg.scale = cell.factors.scale;
    nlohmann::json meta = dataset_meta_json(draw.data, cfg, "truth_edges.csv");
    meta["cell_id"] = cell.cell_id;
    meta["base_id"] = cell.base_id;
    meta["varsortability"] = detail::number_or_null(draw.varsortability);
    std::ofstream os(out_dir / "dataset.meta.json");
    os << meta.dump(2) << '\n';
  }
  std::cout << "cell " << cell.cell_id << " replicate " << replicate << ": n="
            << draw.data.n() << " d=" << draw.data.d() << " edges="
            << draw.truth.edge_count() << " -> " << out_dir.string() << "\n";
  return 0;
}

int cmd_discover(const fs::path& data_path,
                 const std::vector<std::string>& model_names,
                 std::uint64_t seed, double density, const fs::path& out_dir) {
  Dataset ds = read_dataset_file(data_path);
  std::vector<ModelId> models;
  for (const auto& name : model_names) {
    ModelId m = parse_model(name);
    if (m == ModelId::kOracle)
      throw std::runtime_error("oracle needs the truth graph; use the grid verb");
    models.push_back(m);
  }
  fs::create_directories(out_dir);
  Dag placeholder = Dag::empty_graph(ds.d());
  int failures = 0;
  for (ModelId m : models) {
    std::string name = model_name(m);
    try {
      std::uint64_t fit_seed =
          mix_seed(seed, 0xF17, static_cast<std::uint64_t>(m));
      DiscoveryResult res = fit_model(m, ds, placeholder, density, fit_seed);
      std::vector<double> w = flat_row_major(res.w_est.w);
      std::vector<double> selected(w.size(), 0.0);
      int d = ds.d();
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          if (res.g_est.edge(i, j))
            selected[static_cast<std::size_t>(i) * d + j] =
                w[static_cast<std::size_t>(i) * d + j];
      std::ofstream os(out_dir / (name + "_edges.csv"));
      write_edge_list(os, res.g_est, &selected);
      write_order_file(out_dir / (name + "_order.csv"), res.order);
      std::cout << name << ": " << res.g_est.edge_count() << " edges -> "
                << (out_dir / (name + "_edges.csv")).string() << "\n";
    } catch (const std::exception& e) {
      ++failures;
      std::cerr << name << ": failed: " << e.what() << "\n";
    }
  }
  return failures == 0 ? 0 : 1;
}

int cmd_evaluate(const fs::path& truth_path, const fs::path& estimate_path,
                 const fs::path& data_path, const fs::path& order_path,
                 const std::string& format, const fs::path& out_path) {
  Dag truth = read_graph_file(truth_path, 0);
  Dag estimate = read_graph_file(estimate_path, truth.d());
  if (estimate.d() > truth.d())
    truth = read_graph_file(truth_path, estimate.d());
  if (truth.d() != estimate.d())
    throw std::runtime_error("truth and estimate disagree on node count");

  NodeOrder order = order_path.empty() ? order_from_estimate(estimate)
                                       : read_order_file(order_path);
  Evaluation ev = evaluate_estimate(truth, estimate, order);
  double vsort = std::numeric_limits<double>::quiet_NaN();
  if (!data_path.empty()) {
    Dataset ds = read_dataset_file(data_path);
    try {
      vsort = varsortability(truth, ds);
    } catch (const UndefinedValueError&) {
    }
  }

  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) throw std::runtime_error("cannot open " + out_path.string());
    os = &file;
  }
  if (format == "csv") write_evaluation_csv(*os, ev, vsort);
  else *os << evaluation_json(ev, vsort).dump() << '\n';
  return 0;
}

int cmd_grid(const std::string& preset, const std::string& config_path,
             std::uint64_t seed, bool seed_set,
             const std::vector<std::string>& model_names, int jobs,
             const fs::path& out_dir, bool verbose) {
  ExperimentGrid grid = grid_from_flags(preset, config_path);
  if (seed_set) grid.master_seed = seed;
  if (!model_names.empty()) {
    grid.models.clear();
    for (const auto& name : model_names) grid.models.push_back(parse_model(name));
  }
  fs::create_directories(out_dir);
  fs::path records = out_dir / "records.jsonl";
  std::cout << "planned runs: " << planned_runs(grid) << "\n";
  GridRunStats stats =
      run_grid(grid, records, jobs, verbose ? &std::cerr : nullptr);
  std::cout << "written: " << stats.written << "  skipped (already done): "
            << stats.skipped << "\nrecords: " << records.string() << "\n";
  return 0;
}

int cmd_report(const fs::path& records_path, const fs::path& out_dir) {
  std::ifstream in(records_path);
  if (!in) throw std::runtime_error("cannot open " + records_path.string());
  std::vector<RunRecord> records = read_records(in);
  write_report_bundle(records, out_dir);
  std::cout << "report bundle (" << records.size() << " records) -> "
            << out_dir.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"causal-discovery benchmark harness"};
  app.require_subcommand(1);

  std::string preset = "desk";
  std::string config_path;
  int cell_id = 0;
  int replicate = 0;
  std::uint64_t seed = kDefaultMasterSeed;
  std::string out = ".";
  std::vector<std::string> models;
  std::string data_path, truth_path, estimate_path, order_path, records_path;
  std::string format = "jsonl";
  double density = 0.2;
  int jobs = 1;
  bool verbose = false;

  auto* sim = app.add_subcommand("simulate", "write one cell's dataset and truth");
  sim->add_option("--preset", preset, "desk or full")->default_str("desk");
  sim->add_option("--config", config_path, "grid config JSON");
  sim->add_option("--cell", cell_id, "cell id in the grid enumeration")
      ->required();
  sim->add_option("--replicate", replicate, "replicate id");
  auto* sim_seed = sim->add_option("--seed", seed, "master seed override");
  sim->add_option("--out", out, "output directory");

  auto* disc = app.add_subcommand("discover", "fit learners on a dataset CSV");
  disc->add_option("--data", data_path, "dataset CSV")->required();
  disc->add_option("--models", models, "comma-separated model list")
      ->delimiter(',');
  disc->add_option("--seed", seed, "seed for stochastic learners");
  disc->add_option("--density", density,
                   "pair density for the random baseline");
  disc->add_option("--out", out, "output directory");

  auto* ev = app.add_subcommand("evaluate", "score an estimate against truth");
  ev->add_option("--truth", truth_path, "truth graph CSV (edges or adjacency)")
      ->required();
  ev->add_option("--estimate", estimate_path, "estimated graph CSV")
      ->required();
  ev->add_option("--data", data_path, "dataset CSV (for varsortability)");
  ev->add_option("--order", order_path,
                 "method-native order CSV (default: derived from estimate)");
  ev->add_option("--format", format, "jsonl or csv")
      ->check(CLI::IsMember({"jsonl", "csv"}));
  ev->add_option("--out", out, "output file (default stdout)")->default_str("");

  auto* grid = app.add_subcommand("grid", "run a factor grid into records.jsonl");
  grid->add_option("--preset", preset, "desk or full")->default_str("desk");
  grid->add_option("--config", config_path, "grid config JSON");
  auto* grid_seed = grid->add_option("--seed", seed, "master seed override");
  grid->add_option("--models", models, "comma-separated model list override")
      ->delimiter(',');
  grid->add_option("--jobs", jobs, "worker threads")
      ->check(CLI::PositiveNumber);
  grid->add_option("--out", out, "output directory");
  grid->add_flag("--verbose", verbose, "log per-item progress to stderr");

  auto* rep = app.add_subcommand("report", "aggregate records into CSV tables");
  rep->add_option("--records", records_path, "records.jsonl path")->required();
  rep->add_option("--out", out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed())
      return cmd_simulate(preset, config_path, cell_id, replicate, seed,
                          sim_seed->count() > 0, out);
    if (disc->parsed()) {
      if (models.empty())
        models = {"empty", "random", "var_sortnregress", "r2_sortnregress",
                  "notears"};
      return cmd_discover(data_path, models, seed, density, out);
    }
    if (ev->parsed()) {
      fs::path out_file = out == "." ? fs::path() : fs::path(out);
      return cmd_evaluate(truth_path, estimate_path, data_path, order_path,
                          format, out_file);
    }
    if (grid->parsed())
      return cmd_grid(preset, config_path, seed, grid_seed->count() > 0, models,
                      jobs, out, verbose);
    if (rep->parsed()) return cmd_report(records_path, out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
