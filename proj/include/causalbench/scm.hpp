#pragma once

// Structural-model simulation: edge-weight sampling, per-node mechanism
// assignment (linear vs ReLU), sequential additive-noise data generation,
// standardization, subsampling, and the dataset CSV + JSON sidecar format.

#include <Eigen/Dense>
#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "causalbench/graph.hpp"
#include "causalbench/rng.hpp"

namespace causalbench {

struct DegenerateColumnError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct WeightedAdjacency {
  int d = 0;
  Eigen::MatrixXd w;  // w(i, j) is the coefficient on edge i -> j
};

enum class Mechanism { kLinear, kRelu };

// One entry per node; root entries are kLinear placeholders and never used.
using MechanismMap = std::vector<Mechanism>;

enum class Scale { kOriginal, kStandardized };

struct Provenance {
  std::uint64_t master_seed = 0;
  std::int64_t config_id = -1;
  int replicate = -1;
  bool subsampled = false;
};

struct Dataset {
  Eigen::MatrixXd values;  // n x d
  std::vector<std::string> labels;
  Scale scale = Scale::kOriginal;
  Provenance provenance;

  int n() const { return static_cast<int>(values.rows()); }
  int d() const { return static_cast<int>(values.cols()); }
};

struct SimConfig {
  GraphSpec graph;
  double relu_fraction = 0.0;
  double w_upper = 1.0;
  double w_lower = 0.5;
  int n_full = 2500;
  int n_small = 250;
  Scale scale = Scale::kOriginal;
};

// Coefficients are uniform on [-hi,-lo] U [lo,hi]: sign fair, magnitude
// uniform. Edges are visited in row-major order so the stream layout is
// part of the reproducibility contract.
inline WeightedAdjacency sample_weights(const Dag& g, double lo, double hi,
                                        Rng& rng) {
  if (!(0.0 < lo && lo <= hi))
    throw std::invalid_argument("sample_weights: need 0 < lo <= hi");
  int d = g.d();
  WeightedAdjacency wa{d, Eigen::MatrixXd::Zero(d, d)};
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (g.edge(i, j)) {
        double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
        wa.w(i, j) = sign * rng.uniform(lo, hi);
      }
  return wa;
}

// Each node with at least one parent draws RELU with probability q,
// independently; roots keep the placeholder.
inline MechanismMap assign_mechanisms(const Dag& g, double q, Rng& rng) {
  if (q < 0.0 || q > 1.0)
    throw std::invalid_argument("assign_mechanisms: q outside [0,1]");
  int d = g.d();
  MechanismMap mech(d, Mechanism::kLinear);
  for (int v = 0; v < d; ++v)
    if (!g.parents(v).empty() && rng.bernoulli(q)) mech[v] = Mechanism::kRelu;
  return mech;
}

// Sequential generation in topological order. Roots are pure noise; linear
// nodes add the weighted parent sum; ReLU nodes clamp the aggregated parent
// sum at zero before adding noise. Noise is i.i.d. standard normal, drawn
// row-by-row per node.
inline Dataset sample_dataset(const Dag& g, const WeightedAdjacency& wa,
                              const MechanismMap& mech, int n, Rng& rng) {
  int d = g.d();
  if (wa.d != d || static_cast<int>(mech.size()) != d)
    throw std::invalid_argument("sample_dataset: dimension mismatch");
  if (n < 1) throw std::invalid_argument("sample_dataset: n must be >= 1");
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (wa.w(i, j) != 0.0 && !g.edge(i, j))
        throw std::invalid_argument("sample_dataset: weight off the graph");

  NodeOrder order = topological_order(g);
  Dataset ds;
  ds.values = Eigen::MatrixXd::Zero(n, d);
  ds.labels.resize(d);
  for (int v = 0; v < d; ++v) ds.labels[v] = node_label(v);

  Eigen::VectorXd noise(n);
  for (int v : order.seq) {
    for (int r = 0; r < n; ++r) noise(r) = rng.normal();
    auto parents = g.parents(v);
    if (parents.empty()) {
      ds.values.col(v) = noise;
      continue;
    }
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(n);
    for (int p : parents) sum += wa.w(p, v) * ds.values.col(p);
    if (mech[v] == Mechanism::kRelu) sum = sum.cwiseMax(0.0);
    ds.values.col(v) = sum + noise;
  }
  if (!ds.values.allFinite())
    throw std::runtime_error("sample_dataset: non-finite values generated");
  return ds;
}

inline std::vector<double> column_variances(const Eigen::MatrixXd& x) {
  int n = static_cast<int>(x.rows());
  if (n < 2) throw std::invalid_argument("column_variances: need n >= 2");
  std::vector<double> out(static_cast<std::size_t>(x.cols()));
  for (int j = 0; j < x.cols(); ++j) {
    double mean = x.col(j).mean();
    out[static_cast<std::size_t>(j)] =
        (x.col(j).array() - mean).square().sum() / (n - 1);
  }
  return out;
}

// Per-column z-scoring with the n-1 variance denominator.
inline Dataset standardize(const Dataset& ds) {
  int n = ds.n();
  if (n < 2) throw DegenerateColumnError("standardize: need n >= 2");
  Dataset out = ds;
  for (int j = 0; j < ds.d(); ++j) {
    double mean = ds.values.col(j).mean();
    double var = (ds.values.col(j).array() - mean).square().sum() / (n - 1);
    double sd = std::sqrt(var);
    if (!(sd > 1e-12))
      throw DegenerateColumnError("standardize: near-constant column " +
                                  ds.labels[static_cast<std::size_t>(j)]);
    out.values.col(j) = (ds.values.col(j).array() - mean) / sd;
  }
  out.scale = Scale::kStandardized;
  return out;
}

// m distinct rows chosen uniformly; kept in their original order so m = n
// reproduces the input exactly.
inline Dataset subsample(const Dataset& ds, int m, Rng& rng) {
  int n = ds.n();
  if (m < 1 || m > n)
    throw std::invalid_argument("subsample: m outside [1, n]");
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  for (int i = 0; i < m; ++i) {
    int j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - i)));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(m);
  std::sort(idx.begin(), idx.end());
  Dataset out;
  out.values.resize(m, ds.d());
  for (int r = 0; r < m; ++r) out.values.row(r) = ds.values.row(idx[r]);
  out.labels = ds.labels;
  out.scale = ds.scale;
  out.provenance = ds.provenance;
  out.provenance.subsampled = true;
  return out;
}

inline void write_dataset_csv(std::ostream& os, const Dataset& ds) {
  for (int j = 0; j < ds.d(); ++j)
    os << (j ? "," : "") << ds.labels[static_cast<std::size_t>(j)];
  os << '\n';
  for (int r = 0; r < ds.n(); ++r) {
    for (int j = 0; j < ds.d(); ++j)
      os << (j ? "," : "") << detail::format_double(ds.values(r, j));
    os << '\n';
  }
}

inline Dataset read_dataset_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line))
    throw std::invalid_argument("dataset: missing header");
  Dataset ds;
  ds.labels = detail::split_csv_line(line);
  int d = static_cast<int>(ds.labels.size());
  std::vector<double> buf;
  int n = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto f = detail::split_csv_line(line);
    if (static_cast<int>(f.size()) != d)
      throw std::invalid_argument("dataset: ragged row");
    for (auto& s : f) buf.push_back(std::stod(s));
    ++n;
  }
  ds.values.resize(n, d);
  for (int r = 0; r < n; ++r)
    for (int j = 0; j < d; ++j)
      ds.values(r, j) = buf[static_cast<std::size_t>(r) * d + j];
  return ds;
}

// Sidecar metadata for a dataset file; `truth_graph` names the edge-list
// file the dataset was generated from (empty for external data).
inline nlohmann::json dataset_meta_json(const Dataset& ds,
                                        const SimConfig& cfg,
                                        const std::string& truth_graph) {
  nlohmann::json j;
  j["schema"] = "causalbench-dataset-meta/1";
  j["n"] = ds.n();
  j["d"] = ds.d();
  j["scale"] = ds.scale == Scale::kStandardized ? "standardized" : "original";
  j["provenance"] = {{"master_seed", ds.provenance.master_seed},
                     {"config_id", ds.provenance.config_id},
                     {"replicate", ds.provenance.replicate},
                     {"subsampled", ds.provenance.subsampled}};
  j["sim"] = {{"graph",
               cfg.graph.kind == GraphKind::kEr
                   ? nlohmann::json{{"kind", "ER"},
                                    {"d", cfg.graph.d},
                                    {"p", cfg.graph.p}}
                   : nlohmann::json{{"kind", "SF"},
                                    {"d", cfg.graph.d},
                                    {"k", cfg.graph.k}}},
              {"relu_fraction", cfg.relu_fraction},
              {"w_lower", cfg.w_lower},
              {"w_upper", cfg.w_upper},
              {"n_full", cfg.n_full},
              {"n_small", cfg.n_small}};
  j["truth_graph"] = truth_graph;
  return j;
}

}  // namespace causalbench
