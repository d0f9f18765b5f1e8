#pragma once

// Structure learners sharing one result type: variance- and R2-ordered
// SortnRegress, the trivial baselines, and threshold pruning. Every learner
// returns an acyclic estimate or throws; nothing repairs cycles silently.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "causalbench/graph.hpp"
#include "causalbench/regression.hpp"
#include "causalbench/rng.hpp"
#include "causalbench/scm.hpp"

namespace causalbench {

struct DiscoveryResult {
  WeightedAdjacency w_est;  // pre-pruning real weights
  Dag g_est = Dag::empty_graph(1);
  NodeOrder order;  // method-native where one exists, else derived
  std::map<std::string, double> diagnostics;
};

namespace detail {

// Ascending sort with near-ties (relative gap below 1e-9) grouped and the
// group emitted in index order, so floating-point noise cannot scramble
// all-tie inputs such as standardized variances.
inline NodeOrder order_by_keys_ascending(const std::vector<double>& key) {
  const double tol = 1e-9;
  const int d = static_cast<int>(key.size());
  std::vector<int> idx(d);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&key](int a, int b) {
    if (key[a] != key[b]) return key[a] < key[b];
    return a < b;
  });
  std::vector<int> out;
  out.reserve(d);
  int s = 0;
  while (s < d) {
    double anchor = key[idx[s]];
    int e = s + 1;
    while (e < d) {
      double k = key[idx[e]];
      if (k - anchor <= tol * std::max({1.0, std::abs(anchor), std::abs(k)}))
        ++e;
      else
        break;
    }
    std::sort(idx.begin() + s, idx.begin() + e);
    out.insert(out.end(), idx.begin() + s, idx.begin() + e);
    s = e;
  }
  return NodeOrder::of(std::move(out));
}

}  // namespace detail

inline NodeOrder var_sort_order(const Dataset& ds) {
  return detail::order_by_keys_ascending(column_variances(ds.values));
}

inline NodeOrder r2_sort_order(const Dataset& ds) {
  return detail::order_by_keys_ascending(r2_all_others(ds));
}

// Regress each node on its predecessors in `order`; the l1/BIC path picks
// the support and OLS refit on that support provides the edge weights.
inline DiscoveryResult sortnregress(const Dataset& ds, const NodeOrder& order) {
  const int d = ds.d();
  if (static_cast<int>(order.seq.size()) != d)
    throw std::invalid_argument("sortnregress: order does not cover all nodes");
  DiscoveryResult res;
  res.w_est = WeightedAdjacency{d, Eigen::MatrixXd::Zero(d, d)};
  res.order = order;
  std::vector<std::uint8_t> adj(static_cast<std::size_t>(d) * d, 0);
  std::vector<int> preds;
  for (int t = 0; t < d; ++t) {
    int node = order.seq[t];
    if (!preds.empty()) {
      Eigen::VectorXd y = ds.values.col(node);
      LassoSelection sel = lasso_bic_select(ds.values, preds, y);
      if (!sel.support.empty()) {
        std::vector<int> chosen;
        chosen.reserve(sel.support.size());
        for (int k : sel.support) chosen.push_back(preds[k]);
        OlsFit fit = ols(ds.values, chosen, y);
        for (std::size_t k = 0; k < chosen.size(); ++k) {
          if (fit.coef[static_cast<Eigen::Index>(k)] == 0.0) continue;
          res.w_est.w(chosen[k], node) = fit.coef[static_cast<Eigen::Index>(k)];
          adj[static_cast<std::size_t>(chosen[k]) * d + node] = 1;
        }
      }
    }
    preds.push_back(node);
  }
  res.g_est = Dag::from_adjacency(d, std::move(adj));
  return res;
}

inline DiscoveryResult var_sortnregress(const Dataset& ds) {
  return sortnregress(ds, var_sort_order(ds));
}

inline DiscoveryResult r2_sortnregress(const Dataset& ds) {
  return sortnregress(ds, r2_sort_order(ds));
}

// Binary graph keeping entries strictly exceeding tau in absolute value.
// The caller owns cyclicity: Dag construction throws on a cyclic result.
inline Dag threshold_prune(const Eigen::MatrixXd& w, double tau) {
  if (w.rows() != w.cols())
    throw std::invalid_argument("threshold_prune: non-square matrix");
  if (tau < 0.0) throw std::invalid_argument("threshold_prune: tau < 0");
  const int d = static_cast<int>(w.rows());
  std::vector<std::uint8_t> adj(static_cast<std::size_t>(d) * d, 0);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (i != j && std::abs(w(i, j)) > tau)
        adj[static_cast<std::size_t>(i) * d + j] = 1;
  return Dag::from_adjacency(d, std::move(adj));
}

inline DiscoveryResult empty_baseline(const Dataset& ds) {
  const int d = ds.d();
  DiscoveryResult res;
  res.w_est = WeightedAdjacency{d, Eigen::MatrixXd::Zero(d, d)};
  res.g_est = Dag::empty_graph(d);
  res.order = NodeOrder::identity(d);
  return res;
}

// Random DAG at the configured pair density; the orienting permutation of
// the draw doubles as the (random) native order.
inline DiscoveryResult fully_random_baseline(const Dataset& ds, double p,
                                             Rng& rng) {
  const int d = ds.d();
  ErDraw draw = sample_er_dag_with_order(d, p, rng);
  DiscoveryResult res;
  res.w_est = WeightedAdjacency{d, Eigen::MatrixXd::Zero(d, d)};
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (draw.g.edge(i, j)) res.w_est.w(i, j) = 1.0;
  res.g_est = std::move(draw.g);
  res.order = std::move(draw.order);
  return res;
}

}  // namespace causalbench
