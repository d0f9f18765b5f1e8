#pragma once

// Directed acyclic graphs: data structure, random samplers (Erdos-Renyi
// and scale-free preferential attachment), topological ordering,
// reachability and d-separation, plus the CSV exchange formats.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "causalbench/rng.hpp"

namespace causalbench {

struct CyclicGraphError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Nodes are 0-based internally; external labels are X1..Xd.
class Dag {
 public:
  static Dag empty_graph(int d) {
    if (d < 1) throw std::invalid_argument("Dag: node count must be >= 1");
    Dag g;
    g.d_ = d;
    g.adj_.assign(static_cast<std::size_t>(d) * d, 0);
    return g;
  }

  // The only constructor for nonempty graphs; rejects self-loops and cycles,
  // so every Dag in circulation is valid.
  static Dag from_adjacency(int d, std::vector<std::uint8_t> adj) {
    if (d < 1) throw std::invalid_argument("Dag: node count must be >= 1");
    if (adj.size() != static_cast<std::size_t>(d) * d)
      throw std::invalid_argument("Dag: adjacency size mismatch");
    Dag g;
    g.d_ = d;
    g.adj_ = std::move(adj);
    for (int i = 0; i < d; ++i)
      if (g.edge(i, i)) throw std::invalid_argument("Dag: self-loop");
    g.check_acyclic();
    return g;
  }

  int d() const { return d_; }

  bool edge(int i, int j) const {
    return adj_[static_cast<std::size_t>(i) * d_ + j] != 0;
  }

  int edge_count() const {
    int c = 0;
    for (auto v : adj_) c += v != 0;
    return c;
  }

  std::vector<int> parents(int j) const {
    std::vector<int> out;
    for (int i = 0; i < d_; ++i)
      if (edge(i, j)) out.push_back(i);
    return out;
  }

  std::vector<int> children(int i) const {
    std::vector<int> out;
    for (int j = 0; j < d_; ++j)
      if (edge(i, j)) out.push_back(j);
    return out;
  }

  const std::vector<std::uint8_t>& adjacency() const { return adj_; }

  bool operator==(const Dag& o) const { return d_ == o.d_ && adj_ == o.adj_; }

 private:
  Dag() = default;

  void check_acyclic() const {
    std::vector<int> indeg(d_, 0);
    for (int i = 0; i < d_; ++i)
      for (int j = 0; j < d_; ++j)
        if (edge(i, j)) ++indeg[j];
    std::vector<int> stack;
    for (int i = 0; i < d_; ++i)
      if (indeg[i] == 0) stack.push_back(i);
    int emitted = 0;
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      ++emitted;
      for (int j = 0; j < d_; ++j)
        if (edge(v, j) && --indeg[j] == 0) stack.push_back(j);
    }
    if (emitted != d_) throw CyclicGraphError("Dag: cycle detected");
  }

  int d_ = 0;
  std::vector<std::uint8_t> adj_;
};

// Causal order: seq[t] is the node at position t.
struct NodeOrder {
  std::vector<int> seq;

  static NodeOrder of(std::vector<int> seq) {
    NodeOrder o{std::move(seq)};
    std::vector<std::uint8_t> seen(o.seq.size(), 0);
    for (int v : o.seq) {
      if (v < 0 || v >= static_cast<int>(o.seq.size()) || seen[v])
        throw std::invalid_argument("NodeOrder: not a permutation");
      seen[v] = 1;
    }
    return o;
  }

  static NodeOrder identity(int d) {
    NodeOrder o;
    o.seq.resize(d);
    for (int i = 0; i < d; ++i) o.seq[i] = i;
    return o;
  }

  // positions()[v] = index of node v in the order.
  std::vector<int> positions() const {
    std::vector<int> pos(seq.size());
    for (std::size_t t = 0; t < seq.size(); ++t) pos[seq[t]] = static_cast<int>(t);
    return pos;
  }

  bool operator==(const NodeOrder& o) const { return seq == o.seq; }
};

enum class GraphKind { kEr, kSf };

struct GraphSpec {
  int d = 0;
  GraphKind kind = GraphKind::kEr;
  double p = 0.0;  // ER pair probability, set iff kind == kEr
  int k = 0;       // SF attachment count, set iff kind == kSf

  static GraphSpec er(int d, double p) {
    if (d < 1 || p < 0.0 || p > 1.0)
      throw std::invalid_argument("GraphSpec: bad ER parameters");
    return GraphSpec{d, GraphKind::kEr, p, 0};
  }

  static GraphSpec sf(int d, int k) {
    if (d < 1 || k < 1 || k >= d)
      throw std::invalid_argument("GraphSpec: bad SF parameters");
    return GraphSpec{d, GraphKind::kSf, 0.0, k};
  }
};

// Kahn's algorithm; among simultaneously available nodes the smallest index
// is emitted first, so the order is deterministic.
inline NodeOrder topological_order(const Dag& g) {
  int d = g.d();
  std::vector<int> indeg(d, 0);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (g.edge(i, j)) ++indeg[j];
  std::vector<std::uint8_t> done(d, 0);
  NodeOrder order;
  order.seq.reserve(d);
  for (int step = 0; step < d; ++step) {
    int pick = -1;
    for (int v = 0; v < d; ++v) {
      if (!done[v] && indeg[v] == 0) {
        pick = v;
        break;
      }
    }
    if (pick < 0) throw CyclicGraphError("topological_order: cycle detected");
    done[pick] = 1;
    order.seq.push_back(pick);
    for (int j = 0; j < d; ++j)
      if (g.edge(pick, j)) --indeg[j];
  }
  return order;
}

namespace detail {

// Reachability masks exclude the start node itself.
inline std::vector<std::uint8_t> reach_mask(const Dag& g, int start,
                                            bool forward) {
  int d = g.d();
  std::vector<std::uint8_t> mask(d, 0);
  std::vector<int> stack{start};
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (int u = 0; u < d; ++u) {
      bool linked = forward ? g.edge(v, u) : g.edge(u, v);
      if (linked && !mask[u]) {
        mask[u] = 1;
        stack.push_back(u);
      }
    }
  }
  mask[start] = 0;
  return mask;
}

}  // namespace detail

inline std::vector<int> descendants(const Dag& g, int i) {
  if (i < 0 || i >= g.d()) throw std::invalid_argument("descendants: bad node");
  auto mask = detail::reach_mask(g, i, /*forward=*/true);
  std::vector<int> out;
  for (int v = 0; v < g.d(); ++v)
    if (mask[v]) out.push_back(v);
  return out;
}

inline std::vector<int> ancestors(const Dag& g, int i) {
  if (i < 0 || i >= g.d()) throw std::invalid_argument("ancestors: bad node");
  auto mask = detail::reach_mask(g, i, /*forward=*/false);
  std::vector<int> out;
  for (int v = 0; v < g.d(); ++v)
    if (mask[v]) out.push_back(v);
  return out;
}

// Reachability formulation of d-separation (Bayes-ball). A node is entered
// either from a parent ("down" the edge) or from a child ("up"); travel
// continues per the standard active-trail rules, with v-structures enabled
// by ancestors of the conditioning set.
inline bool is_d_separated(const Dag& g, int i, int j,
                           const std::vector<int>& z) {
  int d = g.d();
  if (i == j) throw std::invalid_argument("is_d_separated: i == j");
  if (i < 0 || i >= d || j < 0 || j >= d)
    throw std::invalid_argument("is_d_separated: bad node");
  std::vector<std::uint8_t> in_z(d, 0);
  for (int v : z) {
    if (v < 0 || v >= d) throw std::invalid_argument("is_d_separated: bad Z");
    in_z[v] = 1;
  }
  if (in_z[i] || in_z[j])
    throw std::invalid_argument("is_d_separated: endpoint inside Z");

  // anc_z[v] = v is in Z or has a descendant in Z.
  std::vector<std::uint8_t> anc_z = in_z;
  {
    std::vector<int> stack;
    for (int v = 0; v < d; ++v)
      if (in_z[v]) stack.push_back(v);
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      for (int u = 0; u < d; ++u)
        if (g.edge(u, v) && !anc_z[u]) {
          anc_z[u] = 1;
          stack.push_back(u);
        }
    }
  }

  enum { kUp = 0, kDown = 1 };
  std::vector<std::uint8_t> visited(static_cast<std::size_t>(d) * 2, 0);
  std::vector<std::pair<int, int>> stack{{i, kUp}};
  while (!stack.empty()) {
    auto [v, dir] = stack.back();
    stack.pop_back();
    auto& seen = visited[static_cast<std::size_t>(v) * 2 + dir];
    if (seen) continue;
    seen = 1;
    if (!in_z[v] && v == j) return false;
    if (dir == kUp && !in_z[v]) {
      for (int u = 0; u < d; ++u) {
        if (g.edge(u, v)) stack.push_back({u, kUp});
        if (g.edge(v, u)) stack.push_back({u, kDown});
      }
    } else if (dir == kDown) {
      if (!in_z[v])
        for (int u = 0; u < d; ++u)
          if (g.edge(v, u)) stack.push_back({u, kDown});
      if (anc_z[v])
        for (int u = 0; u < d; ++u)
          if (g.edge(u, v)) stack.push_back({u, kUp});
    }
  }
  return true;
}

struct ErDraw {
  Dag g;
  NodeOrder order;  // the orienting permutation, a topological order of g
};

// Each unordered pair carries an edge with probability p; a random node
// permutation orients every sampled edge from the earlier to the later
// node, so the result is acyclic for every draw.
inline ErDraw sample_er_dag_with_order(int d, double p, Rng& rng) {
  if (d < 1) throw std::invalid_argument("sample_er_dag: d must be >= 1");
  if (p < 0.0 || p > 1.0)
    throw std::invalid_argument("sample_er_dag: p outside [0,1]");
  std::vector<int> perm(d);
  for (int i = 0; i < d; ++i) perm[i] = i;
  rng.shuffle(perm);
  std::vector<int> pos(d);
  for (int t = 0; t < d; ++t) pos[perm[t]] = t;
  std::vector<std::uint8_t> adj(static_cast<std::size_t>(d) * d, 0);
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      if (!rng.bernoulli(p)) continue;
      int a = i, b = j;
      if (pos[a] > pos[b]) std::swap(a, b);
      adj[static_cast<std::size_t>(a) * d + b] = 1;
    }
  }
  return {Dag::from_adjacency(d, std::move(adj)), NodeOrder::of(std::move(perm))};
}

inline Dag sample_er_dag(int d, double p, Rng& rng) {
  return sample_er_dag_with_order(d, p, rng).g;
}

// Preferential attachment: k isolated seed nodes, then each arriving node
// receives k incoming edges from distinct existing nodes chosen with
// probability proportional to their current total degree (uniformly while
// all candidates still have degree 0). Edge count is exactly k*(d-k).
inline Dag sample_sf_dag(int d, int k, Rng& rng) {
  if (d < 1) throw std::invalid_argument("sample_sf_dag: d must be >= 1");
  if (k < 1 || k >= d)
    throw std::invalid_argument("sample_sf_dag: k must satisfy 1 <= k < d");
  std::vector<std::uint8_t> adj(static_cast<std::size_t>(d) * d, 0);
  std::vector<std::int64_t> degree(d, 0);
  for (int v = k; v < d; ++v) {
    std::vector<int> pool(v);
    for (int u = 0; u < v; ++u) pool[u] = u;
    std::vector<std::int64_t> w(degree.begin(), degree.begin() + v);
    for (int pick = 0; pick < k; ++pick) {
      std::int64_t total = 0;
      for (std::size_t c = 0; c < pool.size(); ++c) total += w[c];
      std::size_t chosen;
      if (total == 0) {
        chosen = static_cast<std::size_t>(rng.below(pool.size()));
      } else {
        std::int64_t r = static_cast<std::int64_t>(
            rng.below(static_cast<std::uint64_t>(total)));
        chosen = 0;
        while (r >= w[chosen]) {
          r -= w[chosen];
          ++chosen;
        }
      }
      int parent = pool[chosen];
      adj[static_cast<std::size_t>(parent) * d + v] = 1;
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(chosen));
      w.erase(w.begin() + static_cast<std::ptrdiff_t>(chosen));
    }
    for (int u = 0; u < v; ++u)
      if (adj[static_cast<std::size_t>(u) * d + v]) {
        ++degree[u];
        ++degree[v];
      }
  }
  return Dag::from_adjacency(d, std::move(adj));
}

// Attachment count giving a scale-free graph comparable connectivity to
// ER(d, p): k = round(expected ER edges / d), clamped to at least 1.
inline int er_to_sf_k(int d, double p) {
  if (p <= 0.0 || p > 1.0)
    throw std::invalid_argument("er_to_sf_k: p outside (0,1]");
  double e = p * d * (d - 1) / 2.0;
  int k = static_cast<int>(std::llround(e / d));
  return std::max(1, k);
}

inline std::string node_label(int i) { return "X" + std::to_string(i + 1); }

namespace detail {

inline int parse_node_label(const std::string& s) {
  if (s.size() < 2 || (s[0] != 'X' && s[0] != 'x'))
    throw std::invalid_argument("bad node label: " + s);
  return std::stoi(s.substr(1)) - 1;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

// Edge list CSV: header `source,target,weight`, labels X1..Xd. The optional
// weight vector is row-major d*d; absent entries default to 1.0.
inline void write_edge_list(std::ostream& os, const Dag& g,
                            const std::vector<double>* weights = nullptr) {
  os << "source,target,weight\n";
  int d = g.d();
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (g.edge(i, j)) {
        double w = weights ? (*weights)[static_cast<std::size_t>(i) * d + j]
                           : 1.0;
        os << node_label(i) << ',' << node_label(j) << ','
           << detail::format_double(w) << '\n';
      }
}

struct EdgeListGraph {
  Dag g = Dag::empty_graph(1);
  std::vector<double> weights;  // row-major d*d, 0 where no edge
};

// d may be passed when known (isolated trailing nodes are unrecoverable from
// the rows alone); otherwise the largest label wins.
inline EdgeListGraph read_edge_list(std::istream& is, int d_hint = 0) {
  std::string line;
  if (!std::getline(is, line))
    throw std::invalid_argument("edge list: missing header");
  struct Row {
    int s, t;
    double w;
  };
  std::vector<Row> rows;
  int d = d_hint;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto f = detail::split_csv_line(line);
    if (f.size() != 3) throw std::invalid_argument("edge list: bad row");
    Row r{detail::parse_node_label(f[0]), detail::parse_node_label(f[1]),
          std::stod(f[2])};
    d = std::max({d, r.s + 1, r.t + 1});
    rows.push_back(r);
  }
  if (d < 1) d = 1;
  std::vector<std::uint8_t> adj(static_cast<std::size_t>(d) * d, 0);
  std::vector<double> w(static_cast<std::size_t>(d) * d, 0.0);
  for (const auto& r : rows) {
    adj[static_cast<std::size_t>(r.s) * d + r.t] = 1;
    w[static_cast<std::size_t>(r.s) * d + r.t] = r.w;
  }
  EdgeListGraph out;
  out.g = Dag::from_adjacency(d, std::move(adj));
  out.weights = std::move(w);
  return out;
}

// Dense 0/1 adjacency CSV with header X1..Xd; row i column j = edge i->j.
inline void write_adjacency(std::ostream& os, const Dag& g) {
  int d = g.d();
  for (int j = 0; j < d; ++j) os << (j ? "," : "") << node_label(j);
  os << '\n';
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) os << (j ? "," : "") << (g.edge(i, j) ? 1 : 0);
    os << '\n';
  }
}

inline Dag read_adjacency(std::istream& is) {
  std::string line;
  if (!std::getline(is, line))
    throw std::invalid_argument("adjacency: missing header");
  int d = static_cast<int>(detail::split_csv_line(line).size());
  std::vector<std::uint8_t> adj;
  adj.reserve(static_cast<std::size_t>(d) * d);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto f = detail::split_csv_line(line);
    if (static_cast<int>(f.size()) != d)
      throw std::invalid_argument("adjacency: ragged row");
    for (auto& s : f) adj.push_back(std::stod(s) != 0.0 ? 1 : 0);
  }
  if (adj.size() != static_cast<std::size_t>(d) * d)
    throw std::invalid_argument("adjacency: row count mismatch");
  return Dag::from_adjacency(d, std::move(adj));
}

}  // namespace causalbench
