#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "causalbench/discovery.hpp"
#include "causalbench/metrics.hpp"

using namespace causalbench;
using Catch::Approx;

namespace {

Dag chain(int d) {
  std::vector<std::uint8_t> adj(static_cast<std::size_t>(d) * d, 0);
  for (int v = 0; v + 1 < d; ++v)
    adj[static_cast<std::size_t>(v) * d + v + 1] = 1;
  return Dag::from_adjacency(d, std::move(adj));
}

Dataset chain_data(int d, double w, int n, std::uint64_t seed) {
  Dag g = chain(d);
  WeightedAdjacency wa{d, Eigen::MatrixXd::Zero(d, d)};
  for (int v = 0; v + 1 < d; ++v) wa.w(v, v + 1) = w;
  MechanismMap mech(d, Mechanism::kLinear);
  Rng rng(seed);
  return sample_dataset(g, wa, mech, n, rng);
}

Dataset iid_noise(int d, int n, std::uint64_t seed) {
  Dataset ds;
  ds.values.resize(n, d);
  Rng rng(seed);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < d; ++c) ds.values(r, c) = rng.normal();
  ds.labels.resize(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j) ds.labels[static_cast<std::size_t>(j)] = node_label(j);
  return ds;
}

void check_support_invariants(const DiscoveryResult& res) {
  const int d = res.g_est.d();
  auto pos = res.order.positions();
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      REQUIRE(res.g_est.edge(i, j) == (res.w_est.w(i, j) != 0.0));
      if (res.g_est.edge(i, j)) REQUIRE(pos[i] < pos[j]);
    }
}

}  // namespace

TEST_CASE("variance order sorts ascending with index ties", "[discovery]") {
  Dataset ds;
  ds.values.resize(4, 3);
  ds.values << 0, 0, 0,  //
      10, 1, 5,          //
      20, 2, 10,         //
      30, 3, 15;  // variances 166.7, 1.67, 41.7
  ds.labels = {"X1", "X2", "X3"};
  REQUIRE(var_sort_order(ds).seq == std::vector<int>{1, 2, 0});

  Dataset raw = chain_data(3, 2.0, 2500, 21);
  REQUIRE(var_sort_order(raw).seq == std::vector<int>{0, 1, 2});

  // Standardized variances all tie to 1: the group falls back to index order.
  REQUIRE(var_sort_order(standardize(raw)).seq == std::vector<int>{0, 1, 2});
}

TEST_CASE("r2 order on the collider closed form", "[discovery]") {
  Dag g = Dag::from_adjacency(3, {0, 0, 1,  //
                                  0, 0, 1,  //
                                  0, 0, 0});
  WeightedAdjacency wa{3, Eigen::MatrixXd::Zero(3, 3)};
  wa.w(0, 2) = 2.0;
  wa.w(1, 2) = 2.0;
  MechanismMap mech(3, Mechanism::kLinear);
  Rng rng(2025);
  Dataset ds = sample_dataset(g, wa, mech, 100000, rng);

  // R2 = (0.8, 0.8, 8/9): the parents tie ahead of the collider.
  REQUIRE(r2_sort_order(ds).seq == std::vector<int>{0, 1, 2});
  // R2 is scale-free, so standardization must not change the order.
  REQUIRE(r2_sort_order(standardize(ds)).seq == std::vector<int>{0, 1, 2});
}

TEST_CASE("sortnregress recovers a chain given the right order",
          "[discovery]") {
  Dataset ds = chain_data(3, 2.0, 2500, 7);
  DiscoveryResult res = sortnregress(ds, NodeOrder::identity(3));

  REQUIRE(res.g_est.edge(0, 1));
  REQUIRE(res.g_est.edge(1, 2));
  REQUIRE(res.w_est.w(0, 1) == Approx(2.0).margin(0.1));
  REQUIRE(res.w_est.w(1, 2) == Approx(2.0).margin(0.1));
  // BIC selection may keep a small spurious parent on finite samples; any
  // extra edge has to be near zero.
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (res.g_est.edge(i, j) && !chain(3).edge(i, j))
        REQUIRE(std::abs(res.w_est.w(i, j)) < 0.1);
  check_support_invariants(res);

  REQUIRE_THROWS_AS(sortnregress(ds, NodeOrder::identity(2)),
                    std::invalid_argument);
}

TEST_CASE("sortnregress against the causal order reverses the chain",
          "[discovery]") {
  Dataset ds = chain_data(3, 2.0, 2500, 7);
  DiscoveryResult res = sortnregress(ds, NodeOrder::of({2, 1, 0}));

  REQUIRE(res.order.seq == std::vector<int>{2, 1, 0});
  REQUIRE(cod(chain(3), res.order) == 2);
  check_support_invariants(res);
  // Everything is correlated, so the anti-causal fit keeps reversed edges.
  REQUIRE(res.g_est.edge(1, 0));
  REQUIRE(res.g_est.edge_count() >= 2);
}

TEST_CASE("sortnregress keeps independent noise empty", "[discovery]") {
  Dataset ds = iid_noise(4, 500, 99);
  DiscoveryResult res = sortnregress(ds, NodeOrder::identity(4));
  REQUIRE(res.g_est.edge_count() == 0);
  check_support_invariants(res);
}

TEST_CASE("variance-sorted learner recovers the raw chain", "[discovery]") {
  Dataset ds = chain_data(4, 2.0, 2500, 31);
  DiscoveryResult res = var_sortnregress(ds);
  REQUIRE(res.order.seq == std::vector<int>{0, 1, 2, 3});
  REQUIRE(res.g_est.edge(0, 1));
  REQUIRE(res.g_est.edge(1, 2));
  REQUIRE(res.g_est.edge(2, 3));
  check_support_invariants(res);
}

TEST_CASE("r2-sorted learner recovers the collider on both scales",
          "[discovery]") {
  Dag truth = Dag::from_adjacency(3, {0, 0, 1,  //
                                      0, 0, 1,  //
                                      0, 0, 0});
  WeightedAdjacency wa{3, Eigen::MatrixXd::Zero(3, 3)};
  wa.w(0, 2) = 2.0;
  wa.w(1, 2) = 2.0;
  MechanismMap mech(3, Mechanism::kLinear);
  Rng rng(606);
  Dataset ds = sample_dataset(truth, wa, mech, 10000, rng);

  DiscoveryResult raw = r2_sortnregress(ds);
  REQUIRE(raw.g_est == truth);
  REQUIRE(raw.w_est.w(0, 2) == Approx(2.0).margin(0.1));

  DiscoveryResult std_res = r2_sortnregress(standardize(ds));
  REQUIRE(std_res.g_est == truth);  // support survives standardization
  check_support_invariants(std_res);
}

TEST_CASE("discovery is deterministic", "[discovery]") {
  Dataset ds = chain_data(5, 1.5, 1000, 77);
  DiscoveryResult a = var_sortnregress(ds);
  DiscoveryResult b = var_sortnregress(ds);
  REQUIRE(a.g_est == b.g_est);
  REQUIRE(a.w_est.w == b.w_est.w);
  REQUIRE(a.order == b.order);
}

TEST_CASE("threshold pruning is strict", "[discovery]") {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(3, 3);
  w(0, 1) = 0.29;
  w(0, 2) = -0.31;
  w(1, 2) = 0.3;
  w(1, 1) = 5.0;  // diagonal never becomes an edge

  Dag g = threshold_prune(w, 0.3);
  REQUIRE(g.edge_count() == 1);
  REQUIRE(g.edge(0, 2));

  REQUIRE(threshold_prune(w, 0.0).edge_count() == 3);
  REQUIRE_THROWS_AS(threshold_prune(Eigen::MatrixXd::Zero(2, 3), 0.3),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(threshold_prune(w, -0.1), std::invalid_argument);

  Eigen::MatrixXd cyc = Eigen::MatrixXd::Zero(2, 2);
  cyc(0, 1) = 0.5;
  cyc(1, 0) = -0.5;
  REQUIRE_THROWS_AS(threshold_prune(cyc, 0.3), CyclicGraphError);
}

TEST_CASE("empty baseline", "[discovery]") {
  Dataset ds = iid_noise(6, 10, 3);
  DiscoveryResult res = empty_baseline(ds);
  REQUIRE(res.g_est == Dag::empty_graph(6));
  REQUIRE(res.order == NodeOrder::identity(6));
  REQUIRE(res.w_est.w.isZero());
}

TEST_CASE("random baseline draws at the requested density", "[discovery]") {
  Dataset ds = iid_noise(10, 10, 4);

  Rng a(12), b(12);
  DiscoveryResult r1 = fully_random_baseline(ds, 0.2, a);
  DiscoveryResult r2 = fully_random_baseline(ds, 0.2, b);
  REQUIRE(r1.g_est == r2.g_est);
  REQUIRE(r1.order == r2.order);
  check_support_invariants(r1);
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j)
      if (r1.g_est.edge(i, j)) REQUIRE(r1.w_est.w(i, j) == 1.0);

  Rng rng(5150);
  double total = 0;
  const int draws = 4000;
  for (int t = 0; t < draws; ++t)
    total += fully_random_baseline(ds, 0.2, rng).g_est.edge_count();
  REQUIRE(total / draws == Approx(0.2 * 45).epsilon(0.05));
}
