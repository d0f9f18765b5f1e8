#pragma once

// Experiment harness: factor-grid enumeration, seeded cell execution
// (simulate, fit every model, evaluate, score), JSON-lines persistence with
// resume, a bounded worker pool with ordered commits, and the report bundle.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "causalbench/discovery.hpp"
#include "causalbench/dos.hpp"
#include "causalbench/graph.hpp"
#include "causalbench/metrics.hpp"
#include "causalbench/notears.hpp"
#include "causalbench/records.hpp"
#include "causalbench/rng.hpp"
#include "causalbench/scm.hpp"

namespace causalbench {

inline constexpr std::uint64_t kDefaultMasterSeed = 42;

enum class ModelId {
  kEmpty = 0,
  kRandom = 1,
  kVarSnr = 2,
  kR2Snr = 3,
  kNoTears = 4,
  kOracle = 5,
};

inline std::string model_name(ModelId m) {
  switch (m) {
    case ModelId::kEmpty: return "empty";
    case ModelId::kRandom: return "random";
    case ModelId::kVarSnr: return "var_sortnregress";
    case ModelId::kR2Snr: return "r2_sortnregress";
    case ModelId::kNoTears: return "notears";
    case ModelId::kOracle: return "oracle";
  }
  throw std::logic_error("model_name: bad id");
}

inline ModelId parse_model(const std::string& s) {
  for (ModelId m : {ModelId::kEmpty, ModelId::kRandom, ModelId::kVarSnr,
                    ModelId::kR2Snr, ModelId::kNoTears, ModelId::kOracle})
    if (model_name(m) == s) return m;
  throw std::invalid_argument("unknown model: " + s);
}

inline std::vector<ModelId> default_models() {
  return {ModelId::kEmpty, ModelId::kRandom, ModelId::kVarSnr, ModelId::kR2Snr,
          ModelId::kNoTears};
}

struct ExperimentGrid {
  std::vector<int> sample_sizes = {2500, 250};
  std::vector<int> nodes = {10, 20, 50, 100};
  std::vector<GraphKind> graphs = {GraphKind::kEr, GraphKind::kSf};
  std::vector<double> connectivity = {0.2, 0.3, 0.4};
  std::vector<double> relu_fractions = {0.0, 0.5, 0.7, 0.9};
  std::vector<double> w_upper = {1.0, 2.0, 3.0, 4.0};
  std::vector<Scale> scales = {Scale::kOriginal, Scale::kStandardized};
  int replicates = 10;
  std::uint64_t master_seed = kDefaultMasterSeed;
  std::vector<ModelId> models = default_models();
};

inline ExperimentGrid full_grid() { return ExperimentGrid{}; }

// Minutes-scale preset: small graphs, three replicates, full model list.
inline ExperimentGrid desk_grid() {
  ExperimentGrid g;
  g.nodes = {10, 20};
  g.replicates = 3;
  return g;
}

inline void validate_grid(const ExperimentGrid& g) {
  if (g.sample_sizes.empty() || g.nodes.empty() || g.graphs.empty() ||
      g.connectivity.empty() || g.relu_fractions.empty() ||
      g.w_upper.empty() || g.scales.empty() || g.models.empty())
    throw std::invalid_argument("grid: empty factor domain");
  if (g.replicates < 1) throw std::invalid_argument("grid: replicates < 1");
  for (int n : g.sample_sizes)
    if (n < 2) throw std::invalid_argument("grid: sample size < 2");
  bool has_sf = false;
  for (GraphKind k : g.graphs)
    if (k == GraphKind::kSf) has_sf = true;
  for (int d : g.nodes) {
    if (d < 1) throw std::invalid_argument("grid: nodes < 1");
    if (has_sf && d < 2)
      throw std::invalid_argument("grid: SF graphs need at least 2 nodes");
  }
  for (double p : g.connectivity) {
    if (p < 0.0 || p > 1.0)
      throw std::invalid_argument("grid: connectivity outside [0,1]");
    if (has_sf && p <= 0.0)
      throw std::invalid_argument("grid: SF graphs need connectivity > 0");
  }
  for (double q : g.relu_fractions)
    if (q < 0.0 || q > 1.0)
      throw std::invalid_argument("grid: relu fraction outside [0,1]");
  for (double w : g.w_upper)
    if (w < 0.5) throw std::invalid_argument("grid: w_upper below 0.5");
}

struct Cell {
  int cell_id = -1;
  int base_id = -1;  // index over the five structure-defining factors
  FactorSettings factors;
};

// Lexicographic over the factor domains in declaration order. Cells whose
// structural factors (everything but sample size and scale) coincide share
// base_id and therefore the same simulated draw.
inline std::vector<Cell> enumerate_grid(const ExperimentGrid& g) {
  validate_grid(g);
  std::vector<Cell> cells;
  int cell_id = 0;
  for (std::size_t i_n = 0; i_n < g.sample_sizes.size(); ++i_n)
    for (std::size_t i_d = 0; i_d < g.nodes.size(); ++i_d)
      for (std::size_t i_g = 0; i_g < g.graphs.size(); ++i_g)
        for (std::size_t i_p = 0; i_p < g.connectivity.size(); ++i_p)
          for (std::size_t i_q = 0; i_q < g.relu_fractions.size(); ++i_q)
            for (std::size_t i_w = 0; i_w < g.w_upper.size(); ++i_w)
              for (std::size_t i_s = 0; i_s < g.scales.size(); ++i_s) {
                Cell c;
                c.cell_id = cell_id++;
                c.base_id = static_cast<int>(
                    (((i_d * g.graphs.size() + i_g) * g.connectivity.size() +
                      i_p) *
                         g.relu_fractions.size() +
                     i_q) *
                        g.w_upper.size() +
                    i_w);
                c.factors.sample_size = g.sample_sizes[i_n];
                c.factors.nodes = g.nodes[i_d];
                c.factors.graph = g.graphs[i_g];
                c.factors.connectivity = g.connectivity[i_p];
                c.factors.relu_fraction = g.relu_fractions[i_q];
                c.factors.w_upper = g.w_upper[i_w];
                c.factors.scale = g.scales[i_s];
                cells.push_back(c);
              }
  return cells;
}

inline long planned_runs(const ExperimentGrid& g) {
  long cells = 1;
  cells *= static_cast<long>(g.sample_sizes.size());
  cells *= static_cast<long>(g.nodes.size());
  cells *= static_cast<long>(g.graphs.size());
  cells *= static_cast<long>(g.connectivity.size());
  cells *= static_cast<long>(g.relu_fractions.size());
  cells *= static_cast<long>(g.w_upper.size());
  cells *= static_cast<long>(g.scales.size());
  return cells * g.replicates * static_cast<long>(g.models.size());
}

// Planned total for a hypothetical model roster of the given size, e.g. when
// comparing against a published budget that counts more fits per cell.
inline long planned_runs(const ExperimentGrid& g, int n_models) {
  if (n_models < 1) throw std::invalid_argument("planned_runs: n_models < 1");
  long per_model = planned_runs(g) / static_cast<long>(g.models.size());
  return per_model * n_models;
}

inline std::uint64_t cell_seed(std::uint64_t master, int base_id,
                               int replicate) {
  return mix_seed(master, static_cast<std::uint64_t>(base_id),
                  static_cast<std::uint64_t>(replicate));
}

inline Dag sample_graph(const GraphSpec& spec, Rng& rng) {
  return spec.kind == GraphKind::kEr ? sample_er_dag(spec.d, spec.p, rng)
                                     : sample_sf_dag(spec.d, spec.k, rng);
}

inline GraphSpec graph_spec_for(const FactorSettings& f) {
  if (f.graph == GraphKind::kEr) return GraphSpec::er(f.nodes, f.connectivity);
  return GraphSpec::sf(f.nodes, er_to_sf_k(f.nodes, f.connectivity));
}

struct CellDraw {
  Dag truth = Dag::empty_graph(1);
  WeightedAdjacency weights;
  MechanismMap mechanisms;
  Dataset data;          // after the cell's sample-size and scale variant
  double varsortability; // NaN when the truth graph has no edges
};

// One seeded simulate pass. The structural stream consumes, in order: graph,
// weights, mechanisms, base rows; the subsample stream is derived separately
// so every variant of a base draw sees identical structure and rows.
inline CellDraw simulate_cell(const ExperimentGrid& grid, const Cell& cell,
                              int replicate) {
  std::uint64_t seed = cell_seed(grid.master_seed, cell.base_id, replicate);
  Rng rng(seed);
  int n_base = *std::max_element(grid.sample_sizes.begin(),
                                 grid.sample_sizes.end());

  CellDraw draw;
  draw.truth = sample_graph(graph_spec_for(cell.factors), rng);
  draw.weights =
      sample_weights(draw.truth, 0.5, cell.factors.w_upper, rng);
  draw.mechanisms =
      assign_mechanisms(draw.truth, cell.factors.relu_fraction, rng);
  Dataset ds = sample_dataset(draw.truth, draw.weights, draw.mechanisms,
                              n_base, rng);
  ds.provenance.master_seed = grid.master_seed;
  ds.provenance.config_id = cell.cell_id;
  ds.provenance.replicate = replicate;

  if (cell.factors.sample_size < n_base) {
    Rng sub_rng(mix_seed(seed, 101, 0));
    ds = subsample(ds, cell.factors.sample_size, sub_rng);
  }
  if (cell.factors.scale == Scale::kStandardized) ds = standardize(ds);

  try {
    draw.varsortability = varsortability(draw.truth, ds);
  } catch (const UndefinedValueError&) {
    draw.varsortability = std::numeric_limits<double>::quiet_NaN();
  }
  draw.data = std::move(ds);
  return draw;
}

inline DiscoveryResult fit_model(ModelId m, const Dataset& ds,
                                 const Dag& truth, double density,
                                 std::uint64_t fit_seed) {
  switch (m) {
    case ModelId::kEmpty:
      return empty_baseline(ds);
    case ModelId::kRandom: {
      Rng rng(fit_seed);
      return fully_random_baseline(ds, density, rng);
    }
    case ModelId::kVarSnr:
      return var_sortnregress(ds);
    case ModelId::kR2Snr:
      return r2_sortnregress(ds);
    case ModelId::kNoTears:
      return notears_linear(ds);
    case ModelId::kOracle: {
      DiscoveryResult res;
      int d = truth.d();
      res.w_est = WeightedAdjacency{d, Eigen::MatrixXd::Zero(d, d)};
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          if (truth.edge(i, j)) res.w_est.w(i, j) = 1.0;
      res.g_est = truth;
      res.order = topological_order(truth);
      return res;
    }
  }
  throw std::logic_error("fit_model: bad id");
}

inline std::vector<RunRecord> run_cell_models(const ExperimentGrid& grid,
                                              const Cell& cell, int replicate,
                                              const std::vector<ModelId>& models) {
  std::uint64_t seed = cell_seed(grid.master_seed, cell.base_id, replicate);
  RunRecord proto;
  proto.cell_id = cell.cell_id;
  proto.base_id = cell.base_id;
  proto.replicate = replicate;
  proto.seed = seed;
  proto.factors = cell.factors;

  std::vector<RunRecord> out;
  std::optional<CellDraw> draw;
  std::string prep_error;
  try {
    draw.emplace(simulate_cell(grid, cell, replicate));
  } catch (const std::exception& e) {
    prep_error = e.what();
  }

  for (ModelId m : models) {
    RunRecord rec = proto;
    rec.model = model_name(m);
    if (!draw) {
      rec.status = "failed";
      rec.error = "simulate: " + prep_error;
      out.push_back(std::move(rec));
      continue;
    }
    rec.varsortability = draw->varsortability;
    auto t0 = std::chrono::steady_clock::now();
    try {
      std::uint64_t fit_seed =
          mix_seed(seed, 0xF17, static_cast<std::uint64_t>(m));
      DiscoveryResult fit = fit_model(m, draw->data, draw->truth,
                                      cell.factors.connectivity, fit_seed);
      Evaluation ev = evaluate_estimate(draw->truth, fit.g_est, fit.order);
      rec.counts = ev.counts;
      rec.shd = ev.shd;
      rec.cod = ev.cod;
      rec.sid = ev.sid;
      rec.metrics = ev.metrics;
      rec.dos = dos_value(ev.metrics);
      rec.status = "ok";
    } catch (const std::exception& e) {
      rec.status = "failed";
      rec.error = e.what();
    }
    auto t1 = std::chrono::steady_clock::now();
    rec.wall_ms =
        std::chrono::duration<double, std::milli>(t1 - t0).count();
    out.push_back(std::move(rec));
  }
  return out;
}

inline std::vector<RunRecord> run_cell(const ExperimentGrid& grid,
                                       const Cell& cell, int replicate) {
  return run_cell_models(grid, cell, replicate, grid.models);
}

struct GridRunStats {
  long written = 0;
  long skipped = 0;  // (cell, replicate, model) keys already in the file
};

// Executes every (cell, replicate) work item, appends one JSON line per
// record. Items may be computed by several workers but are committed in
// enumeration order by the single writer, so output bytes do not depend on
// scheduling. Keys already present in the records file are skipped.
inline GridRunStats run_grid(const ExperimentGrid& grid,
                             const std::filesystem::path& records_path,
                             int jobs = 1, std::ostream* log = nullptr) {
  validate_grid(grid);
  std::set<std::string> done;
  if (std::filesystem::exists(records_path)) {
    std::ifstream in(records_path);
    for (const RunRecord& r : read_records(in)) done.insert(r.key());
  }

  struct Item {
    Cell cell;
    int replicate;
    std::vector<ModelId> models;
  };
  std::vector<Item> items;
  GridRunStats stats;
  for (const Cell& cell : enumerate_grid(grid)) {
    for (int rep = 0; rep < grid.replicates; ++rep) {
      Item item{cell, rep, {}};
      for (ModelId m : grid.models) {
        std::string key = std::to_string(cell.cell_id) + ":" +
                          std::to_string(rep) + ":" + model_name(m);
        if (done.count(key)) ++stats.skipped;
        else item.models.push_back(m);
      }
      if (!item.models.empty()) items.push_back(std::move(item));
    }
  }

  std::ofstream out(records_path, std::ios::app);
  if (!out) throw std::runtime_error("run_grid: cannot open records file");
  auto commit = [&](const std::vector<RunRecord>& recs) {
    for (const RunRecord& r : recs) {
      out << record_line(r) << '\n';
      ++stats.written;
    }
    out.flush();
  };

  if (jobs <= 1) {
    for (std::size_t i = 0; i < items.size(); ++i) {
      commit(run_cell_models(grid, items[i].cell, items[i].replicate,
                             items[i].models));
      if (log)
        *log << "cell " << items[i].cell.cell_id << " rep "
             << items[i].replicate << " done (" << i + 1 << "/" << items.size()
             << ")\n";
    }
    return stats;
  }

  std::vector<std::optional<std::vector<RunRecord>>> slots(items.size());
  std::mutex mu;
  std::condition_variable cv;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= items.size()) break;
      auto recs = run_cell_models(grid, items[i].cell, items[i].replicate,
                                  items[i].models);
      std::lock_guard<std::mutex> lock(mu);
      slots[i] = std::move(recs);
      cv.notify_all();
    }
  };
  std::vector<std::thread> pool;
  int n_workers = std::min<int>(jobs, static_cast<int>(items.size()));
  pool.reserve(static_cast<std::size_t>(n_workers));
  for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (std::size_t i = 0; i < items.size(); ++i) {
    std::unique_lock<std::mutex> lock(mu);
    cv.wait(lock, [&] { return slots[i].has_value(); });
    auto recs = std::move(*slots[i]);
    slots[i].reset();
    lock.unlock();
    commit(recs);
    if (log)
      *log << "cell " << items[i].cell.cell_id << " rep "
           << items[i].replicate << " done (" << i + 1 << "/" << items.size()
           << ")\n";
  }
  for (auto& t : pool) t.join();
  return stats;
}

// ---- report bundle ----

inline std::string sensitivity_baseline(const std::vector<RunRecord>& records,
                                        const std::string& factor) {
  std::set<std::string> observed;
  for (const auto& r : records) observed.insert(factor_level(r, factor));
  auto defaults = default_baselines();
  auto it = defaults.find(factor);
  if (it != defaults.end() && observed.count(it->second)) return it->second;
  std::vector<std::string> levels(observed.begin(), observed.end());
  std::sort(levels.begin(), levels.end(), level_less);
  return levels.front();
}

inline void write_report_bundle(const std::vector<RunRecord>& records,
                                const std::filesystem::path& out_dir) {
  if (records.empty())
    throw std::invalid_argument("report: no records");
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream os(out_dir / "ranking.csv");
    write_ranking_csv(os, records);
  }
  std::vector<SensitivityTable> tables;
  for (const auto& factor : factor_names()) {
    SensitivityTable t = factor_sensitivity(
        records, factor, sensitivity_baseline(records, factor));
    std::ofstream os(out_dir / ("sensitivity_" + factor + ".csv"));
    write_sensitivity_csv(os, t);
    tables.push_back(std::move(t));
  }
  {
    std::ofstream os(out_dir / "sensitivity_summary.csv");
    write_sensitivity_summary_csv(os, tables);
  }
  {
    std::vector<std::string> dims = {"model"};
    for (const auto& f : factor_names()) dims.push_back(f);
    std::vector<ConditionalMeans> cm;
    for (std::size_t a = 0; a < dims.size(); ++a)
      for (std::size_t b = a + 1; b < dims.size(); ++b)
        cm.push_back(conditional_means(records, dims[a], dims[b]));
    std::ofstream os(out_dir / "conditional_means.csv");
    write_conditional_means_csv(os, cm);
  }
}

// ---- config file ----

inline ExperimentGrid grid_from_json(const nlohmann::json& j) {
  static const std::set<std::string> known = {
      "sample_sizes", "nodes",   "graphs",      "connectivity",
      "relu_fractions", "w_upper", "scales",    "replicates",
      "master_seed",  "models"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key()))
      throw std::invalid_argument("config: unknown key '" + it.key() + "'");
  ExperimentGrid g;
  if (j.contains("sample_sizes"))
    g.sample_sizes = j.at("sample_sizes").get<std::vector<int>>();
  if (j.contains("nodes")) g.nodes = j.at("nodes").get<std::vector<int>>();
  if (j.contains("graphs")) {
    g.graphs.clear();
    for (const auto& s : j.at("graphs"))
      g.graphs.push_back(parse_kind(s.get<std::string>()));
  }
  if (j.contains("connectivity"))
    g.connectivity = j.at("connectivity").get<std::vector<double>>();
  if (j.contains("relu_fractions"))
    g.relu_fractions = j.at("relu_fractions").get<std::vector<double>>();
  if (j.contains("w_upper"))
    g.w_upper = j.at("w_upper").get<std::vector<double>>();
  if (j.contains("scales")) {
    g.scales.clear();
    for (const auto& s : j.at("scales"))
      g.scales.push_back(parse_scale(s.get<std::string>()));
  }
  if (j.contains("replicates")) g.replicates = j.at("replicates").get<int>();
  if (j.contains("master_seed"))
    g.master_seed = j.at("master_seed").get<std::uint64_t>();
  if (j.contains("models")) {
    g.models.clear();
    for (const auto& s : j.at("models"))
      g.models.push_back(parse_model(s.get<std::string>()));
  }
  validate_grid(g);
  return g;
}

inline ExperimentGrid load_grid_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path.string());
  nlohmann::json j;
  in >> j;
  return grid_from_json(j);
}

}  // namespace causalbench
