#pragma once

// Graph-recovery metrics: directed confusion counts, SHD, TPR, the
// modified-denominator FPR, flattened-adjacency F1, causal order divergence,
// structural intervention distance via the adjustment criterion, and the
// varsortability diagnostic. All six normalized scores live in [0, 1].

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "causalbench/graph.hpp"
#include "causalbench/scm.hpp"

namespace causalbench {

struct UndefinedValueError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfusionCounts {
  int tp_dir = 0;   // estimated edges with matching direction
  int fp_skel = 0;  // estimated edges absent from the true skeleton
  int missing = 0;  // true edges absent from the estimated skeleton
  int reversed = 0; // edges present in both skeletons, direction flipped
  int t_true = 0;
  int e_est = 0;
  int d = 0;
};

struct MetricVector {
  double tpr = 0.0;
  double fpr = 0.0;
  double nshd = 0.0;
  double f1 = 0.0;
  double ncod = 0.0;
  double nsid = 0.0;

  // Fixed component order [TPR, FPR, nSHD, F1, nCOD, nSID].
  std::vector<double> to_array() const { return {tpr, fpr, nshd, f1, ncod, nsid}; }
};

inline ConfusionCounts confusion(const Dag& truth, const Dag& estimate) {
  if (truth.d() != estimate.d())
    throw std::invalid_argument("confusion: dimension mismatch");
  int d = truth.d();
  ConfusionCounts c;
  c.d = d;
  c.t_true = truth.edge_count();
  c.e_est = estimate.edge_count();
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      if (i == j) continue;
      bool t = truth.edge(i, j);
      bool e = estimate.edge(i, j);
      bool e_rev = estimate.edge(j, i);
      if (t && e) ++c.tp_dir;
      if (t && !e && e_rev) ++c.reversed;
      if (t && !e && !e_rev) ++c.missing;
      if (e && !t && !truth.edge(j, i)) ++c.fp_skel;
    }
  }
  return c;
}

inline int shd(const ConfusionCounts& c) {
  return c.fp_skel + c.missing + c.reversed;
}

inline double nshd(const ConfusionCounts& c) {
  int denom = c.t_true + c.e_est;
  return denom == 0 ? 0.0 : static_cast<double>(shd(c)) / denom;
}

// Vacuously perfect recall when the truth has no edges.
inline double tpr(const ConfusionCounts& c) {
  return c.t_true == 0 ? 1.0 : static_cast<double>(c.tp_dir) / c.t_true;
}

// Denominator d(d-1) - T: ordered non-edge pairs, the 0.5 factor dropped.
inline double fpr_mod(const ConfusionCounts& c) {
  double denom = static_cast<double>(c.d) * (c.d - 1) - c.t_true;
  if (denom <= 0.0) return 0.0;  // d = 1 has no pairs at all
  return (c.reversed + c.fp_skel) / denom;
}

// Binary F1 over the flattened adjacency (ordered pairs, positive = edge).
inline double f1(const ConfusionCounts& c) {
  int denom = 2 * c.tp_dir + (c.e_est - c.tp_dir) + (c.t_true - c.tp_dir);
  if (denom == 0) return 1.0;  // both graphs empty
  return 2.0 * c.tp_dir / denom;
}

inline NodeOrder order_from_estimate(const Dag& estimate) {
  return topological_order(estimate);
}

// True edges pointing against the order.
inline int cod(const Dag& truth, const NodeOrder& order) {
  if (static_cast<int>(order.seq.size()) != truth.d())
    throw std::invalid_argument("cod: order does not cover all nodes");
  auto pos = order.positions();
  int count = 0;
  for (int i = 0; i < truth.d(); ++i)
    for (int j = 0; j < truth.d(); ++j)
      if (truth.edge(i, j) && pos[i] > pos[j]) ++count;
  return count;
}

inline double ncod(const Dag& truth, const NodeOrder& order) {
  int e = truth.edge_count();
  return e == 0 ? 0.0 : static_cast<double>(cod(truth, order)) / e;
}

// Adjustment criterion for the ordered pair (i, j) in `truth`:
//   (a) Z avoids every node on a proper directed path i -> ... -> j and all
//       descendants of such nodes;
//   (b) Z d-blocks every proper non-causal path, checked as d-separation in
//       the graph with the first edge of every proper causal path removed
//       (blocked-by-(a) paths cannot sneak back in: their first collider is
//       a forbidden node).
inline bool is_valid_adjustment(const Dag& truth, int i, int j,
                                const std::vector<int>& z) {
  int d = truth.d();
  if (i == j) throw std::invalid_argument("is_valid_adjustment: i == j");
  if (i < 0 || i >= d || j < 0 || j >= d)
    throw std::invalid_argument("is_valid_adjustment: bad node");
  std::vector<std::uint8_t> in_z(d, 0);
  for (int v : z) {
    if (v < 0 || v >= d)
      throw std::invalid_argument("is_valid_adjustment: bad Z");
    in_z[v] = 1;
  }
  if (in_z[j] || in_z[i]) return false;

  auto desc_i = detail::reach_mask(truth, i, /*forward=*/true);
  auto anc_j = detail::reach_mask(truth, j, /*forward=*/false);
  std::vector<std::uint8_t> causal(d, 0);  // nodes != i on proper causal paths
  for (int v = 0; v < d; ++v)
    if (v != i && desc_i[v] && (anc_j[v] || v == j)) causal[v] = 1;

  // forbidden = causal nodes plus their descendants (inclusive closure)
  std::vector<std::uint8_t> forbidden = causal;
  std::vector<int> stack;
  for (int v = 0; v < d; ++v)
    if (causal[v]) stack.push_back(v);
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (int u = 0; u < d; ++u)
      if (truth.edge(v, u) && !forbidden[u]) {
        forbidden[u] = 1;
        stack.push_back(u);
      }
  }
  for (int v : z)
    if (forbidden[v]) return false;

  std::vector<std::uint8_t> adj = truth.adjacency();
  for (int v = 0; v < d; ++v)
    if (causal[v]) adj[static_cast<std::size_t>(i) * d + v] = 0;
  Dag pbd = Dag::from_adjacency(d, std::move(adj));
  return is_d_separated(pbd, i, j, z);
}

// For every ordered pair (i, j): when j is an estimated parent of i the
// estimate asserts a null effect of i on j, correct iff j is not a true
// descendant of i; otherwise the estimate's parent set must be a valid
// adjustment set for (i, j).
inline int sid(const Dag& truth, const Dag& estimate) {
  if (truth.d() != estimate.d())
    throw std::invalid_argument("sid: dimension mismatch");
  int d = truth.d();
  int incorrect = 0;
  for (int i = 0; i < d; ++i) {
    auto pa = estimate.parents(i);
    std::vector<std::uint8_t> is_pa(d, 0);
    for (int v : pa) is_pa[v] = 1;
    auto desc_i = detail::reach_mask(truth, i, /*forward=*/true);
    for (int j = 0; j < d; ++j) {
      if (j == i) continue;
      bool correct = is_pa[j] ? !desc_i[j]
                              : is_valid_adjustment(truth, i, j, pa);
      if (!correct) ++incorrect;
    }
  }
  return incorrect;
}

inline double nsid(const Dag& truth, const Dag& estimate) {
  int d = truth.d();
  double denom = static_cast<double>(d) * (d - 1);
  return denom == 0.0 ? 0.0 : sid(truth, estimate) / denom;
}

// Fraction of true edges whose parent has strictly lower sample variance.
// Near-equal variances (relative difference below 1e-9) count as ties and
// ties count as not satisfied, so standardized data scores 0.
inline double varsortability(const Dag& truth, const Dataset& ds) {
  if (truth.d() != ds.d())
    throw std::invalid_argument("varsortability: dimension mismatch");
  int e = truth.edge_count();
  if (e == 0)
    throw UndefinedValueError("varsortability: truth graph has no edges");
  auto var = column_variances(ds.values);
  int satisfied = 0;
  for (int i = 0; i < truth.d(); ++i)
    for (int j = 0; j < truth.d(); ++j)
      if (truth.edge(i, j)) {
        double a = var[static_cast<std::size_t>(i)];
        double b = var[static_cast<std::size_t>(j)];
        double tol = 1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
        if (b - a > tol) ++satisfied;
      }
  return static_cast<double>(satisfied) / e;
}

struct Evaluation {
  ConfusionCounts counts;
  int shd = 0;
  int cod = 0;
  int sid = 0;
  MetricVector metrics;
};

// `order` is the causal order credited to the estimate (method-native when
// the learner provides one, else its derived topological order).
inline Evaluation evaluate_estimate(const Dag& truth, const Dag& estimate,
                                    const NodeOrder& order) {
  Evaluation ev;
  ev.counts = confusion(truth, estimate);
  ev.shd = shd(ev.counts);
  ev.cod = cod(truth, order);
  ev.sid = sid(truth, estimate);
  ev.metrics.tpr = tpr(ev.counts);
  ev.metrics.fpr = fpr_mod(ev.counts);
  ev.metrics.nshd = nshd(ev.counts);
  ev.metrics.f1 = f1(ev.counts);
  ev.metrics.ncod = ncod(truth, order);
  ev.metrics.nsid = nsid(truth, estimate);
  return ev;
}

}  // namespace causalbench
