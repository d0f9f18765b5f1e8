// Acceptance suite: one PASS/FAIL line per criterion, exit code equals the
// number of failed criteria. Thresholds are fixed constants; nothing here
// adapts to the observed results.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "causalbench/discovery.hpp"
#include "causalbench/dos.hpp"
#include "causalbench/graph.hpp"
#include "causalbench/harness.hpp"
#include "causalbench/metrics.hpp"
#include "causalbench/notears.hpp"
#include "causalbench/records.hpp"
#include "causalbench/rng.hpp"
#include "causalbench/scm.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;
using namespace causalbench;

namespace {

// Pinned tolerances and budgets.
constexpr long kExpectedCells = 1536;
constexpr long kExpectedInstances = 15360;
constexpr long kExpectedRuns14 = 215040;
constexpr int kDosFuzzVectors = 100000;
constexpr int kIdentityDags = 200;
constexpr int kSidPairs = 500;
constexpr long kMinDsepQueries = 10000;
constexpr int kErDrawsPerPair = 10000;
constexpr double kErMeanRelTol = 0.02;
constexpr double kSfVsErRelTol = 0.15;
constexpr double kHDagTol = 1e-10;
constexpr double kTwoCycleTol = 1e-8;
constexpr double kGradRelTol = 1e-5;
constexpr int kRegimeSeeds = 10;
constexpr double kRegimeNshdMax = 0.2;
constexpr double kRegimeDosMin = 0.7;
constexpr double kR2BandCenter = 0.65;
constexpr double kR2BandHalfWidth = 0.20;

int g_failures = 0;

void criterion(int id, const std::string& name,
               const std::function<std::string()>& body) {
  auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  std::string detail;
  try {
    detail = body();
  } catch (const std::exception& e) {
    ok = false;
    detail = e.what();
  }
  double secs = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
  std::ostringstream line;
  line << (ok ? "PASS" : "FAIL") << " criterion " << id << ": " << name;
  if (!detail.empty()) line << (ok ? " (" : ": ") << detail << (ok ? ")" : "");
  line << " [" << std::fixed << std::setprecision(1) << secs << "s]";
  std::cout << line.str() << std::endl;
  if (!ok) ++g_failures;
}

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::runtime_error(msg);
}

std::string fmt(double x, int prec = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(prec) << x;
  return os.str();
}

fs::path acceptance_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "causalbench-acceptance";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

// Desk-preset records, produced once and shared by the ranking and
// determinism criteria. run_grid skips already-written keys, so a repeat
// call after a completed run is a no-op.
const fs::path& desk_serial_records() {
  static const fs::path path = [] {
    fs::path p = acceptance_dir() / "desk_serial.jsonl";
    run_grid(desk_grid(), p, 1);
    return p;
  }();
  return path;
}

std::vector<nlohmann::json> parsed_without_wall(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  std::vector<nlohmann::json> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    j.erase("wall_ms");
    out.push_back(std::move(j));
  }
  return out;
}

// The ten fixed raw-scale datasets shared by the recovery and scale
// criteria: linear ER(d=10, p=0.2), n=2500, weights in [0.5, 2].
struct RegimeDraw {
  Dag truth = Dag::empty_graph(1);
  Dataset data;
};

const std::vector<RegimeDraw>& regime_draws() {
  static const std::vector<RegimeDraw> draws = [] {
    std::vector<RegimeDraw> out;
    for (int s = 0; s < kRegimeSeeds; ++s) {
      Rng rng(mix_seed(kDefaultMasterSeed, 0xBE9C, s));
      RegimeDraw d;
      d.truth = sample_er_dag(10, 0.2, rng);
      WeightedAdjacency w = sample_weights(d.truth, 0.5, 2.0, rng);
      MechanismMap mech = assign_mechanisms(d.truth, 0.0, rng);
      d.data = sample_dataset(d.truth, w, mech, 2500, rng);
      out.push_back(std::move(d));
    }
    return out;
  }();
  return draws;
}

double notears_dos_mean(bool standardized, double* nshd_mean = nullptr) {
  double dos_sum = 0.0, nshd_sum = 0.0;
  for (const RegimeDraw& d : regime_draws()) {
    Dataset ds = standardized ? standardize(d.data) : d.data;
    DiscoveryResult fit = notears_linear(ds);
    Evaluation ev = evaluate_estimate(d.truth, fit.g_est, fit.order);
    dos_sum += dos_value(ev.metrics);
    nshd_sum += ev.metrics.nshd;
  }
  if (nshd_mean) *nshd_mean = nshd_sum / kRegimeSeeds;
  return dos_sum / kRegimeSeeds;
}

}  // namespace

int main() {
  criterion(1, "experiment grid arithmetic", [] {
    ExperimentGrid g = full_grid();
    long cells = static_cast<long>(enumerate_grid(g).size());
    long instances = cells * g.replicates;
    long runs14 = planned_runs(g, 14);
    require(cells == kExpectedCells,
            "cells = " + std::to_string(cells));
    require(instances == kExpectedInstances,
            "instances = " + std::to_string(instances));
    require(runs14 == kExpectedRuns14,
            "runs for 14 models = " + std::to_string(runs14));
    return "cells=1536 instances=15360 runs14=215040";
  });

  criterion(2, "dos anchors and bounds", [] {
    ScenarioPair sc = default_scenarios();
    const std::array<double, 6> best = {1, 0, 0, 1, 0, 0};
    const std::array<double, 6> worst = {0, 1, 1, 0, 1, 1};
    require(sc.s_plus == best, "ideal anchor mismatch");
    require(sc.s_minus == worst, "worst anchor mismatch");

    MetricVector ideal{1, 0, 0, 1, 0, 0};
    MetricVector anti{0, 1, 1, 0, 1, 1};
    MetricVector mid{0.5, 0.5, 0.5, 0.5, 0.5, 0.5};
    require(dos_value(ideal) == 1.0, "dos(ideal) != 1");
    require(dos_value(anti) == 0.0, "dos(worst) != 0");
    require(dos_value(mid) == 0.5, "dos(mid) != 0.5");

    Rng rng(0xD05);
    for (int i = 0; i < kDosFuzzVectors; ++i) {
      MetricVector m{rng.uniform(), rng.uniform(), rng.uniform(),
                     rng.uniform(), rng.uniform(), rng.uniform()};
      double v = dos_value(m);
      require(v >= 0.0 && v <= 1.0, "dos escaped [0,1]: " + fmt(v, 9));
    }
    return "anchors exact, 1e5 fuzz in bounds";
  });

  criterion(3, "perfect-estimate metric identities", [] {
    Rng rng(0x1DE7);
    const double ps[] = {0.2, 0.5, 0.8};
    for (int t = 0; t < kIdentityDags; ++t) {
      int d = 2 + static_cast<int>(rng.below(11));
      Dag g = sample_er_dag(d, ps[t % 3], rng);
      Evaluation ev = evaluate_estimate(g, g, topological_order(g));
      bool exact = ev.metrics.tpr == 1.0 && ev.metrics.fpr == 0.0 &&
                   ev.metrics.nshd == 0.0 && ev.metrics.f1 == 1.0 &&
                   ev.metrics.ncod == 0.0 && ev.metrics.nsid == 0.0;
      require(exact, "non-ideal metrics on trial " + std::to_string(t));
    }
    return std::to_string(kIdentityDags) + " dags, all exact";
  });

  criterion(4, "sid matches the linear adjustment oracle", [] {
    Rng structure(0x51D0);
    Rng weights(0x51D1);
    const double ps[] = {0.3, 0.5, 0.8};
    for (int t = 0; t < kSidPairs; ++t) {
      int d = 2 + t % 3;
      Dag truth = sample_er_dag(d, ps[t % 3], structure);
      Dag est = sample_er_dag(d, ps[(t + 1) % 3], structure);
      int got = sid(truth, est);
      int want = oracles::oracle_sid(truth, est, weights);
      require(got == want, "pair " + std::to_string(t) + ": sid " +
                               std::to_string(got) + " vs oracle " +
                               std::to_string(want));
    }
    return std::to_string(kSidPairs) + " pairs agree";
  });

  criterion(5, "d-separation matches path enumeration", [] {
    long queries = 0;
    auto check = [&](const Dag& g, int i, int j, const std::vector<int>& z) {
      bool fast = is_d_separated(g, i, j, z);
      bool slow = oracles::brute_force_d_separated(g, i, j, z);
      require(fast == slow, "mismatch on a d=" + std::to_string(g.d()) +
                                " query (" + std::to_string(i) + "," +
                                std::to_string(j) + ")");
      ++queries;
    };

    for (int d = 2; d <= 4; ++d)
      for (const Dag& g : oracles::all_dags(d))
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) {
            if (i == j) continue;
            std::vector<int> others;
            for (int v = 0; v < d; ++v)
              if (v != i && v != j) others.push_back(v);
            for (int mask = 0; mask < (1 << others.size()); ++mask) {
              std::vector<int> z;
              for (std::size_t b = 0; b < others.size(); ++b)
                if (mask & (1 << b)) z.push_back(others[b]);
              check(g, i, j, z);
            }
          }

    Rng rng(0xD5E9);
    for (const Dag& g : oracles::all_dags(5)) {
      int i = static_cast<int>(rng.below(5));
      int j = static_cast<int>(rng.below(4));
      if (j >= i) ++j;
      std::vector<int> z;
      for (int v = 0; v < 5; ++v)
        if (v != i && v != j && rng.bernoulli(0.5)) z.push_back(v);
      check(g, i, j, z);
    }

    require(queries >= kMinDsepQueries,
            "only " + std::to_string(queries) + " queries");
    return std::to_string(queries) + " queries, exact agreement";
  });

  criterion(6, "graph sampler edge counts", [] {
    const int ds[] = {10, 20, 50, 100};
    const double ps[] = {0.2, 0.3, 0.4};
    int over_band = 0;
    std::ostringstream table;
    for (int d : ds)
      for (double p : ps) {
        double expected = p * d * (d - 1) / 2.0;

        Rng rng(mix_seed(0x6E4A, static_cast<std::uint64_t>(d),
                         static_cast<std::uint64_t>(p * 10)));
        double total = 0.0;
        for (int t = 0; t < kErDrawsPerPair; ++t)
          total += sample_er_dag(d, p, rng).edge_count();
        double er_mean = total / kErDrawsPerPair;
        double er_rel = std::abs(er_mean - expected) / expected;
        require(er_rel <= kErMeanRelTol,
                "ER mean off by " + fmt(100 * er_rel, 2) + "% at d=" +
                    std::to_string(d) + " p=" + fmt(p, 1));

        int k = er_to_sf_k(d, p);
        int sf_edges = sample_sf_dag(d, k, rng).edge_count();
        require(sf_edges == k * (d - k),
                "SF edge count " + std::to_string(sf_edges) + " != k(d-k)");

        double sf_rel = std::abs(sf_edges - expected) / expected;
        if (sf_rel > kSfVsErRelTol) ++over_band;
        table << "  d=" << std::setw(3) << d << " p=" << fmt(p, 1)
              << "  ER mean " << std::setw(7) << fmt(expected, 1)
              << "  SF k=" << std::setw(2) << k << " edges " << std::setw(4)
              << sf_edges << "  diff " << std::setw(5) << fmt(100 * sf_rel, 1)
              << "%" << (sf_rel > kSfVsErRelTol ? "  over 15% band" : "")
              << "\n";
      }
    std::cout << table.str();
    require(over_band == 0,
            "SF vs ER difference exceeds 15% for " + std::to_string(over_band) +
                "/12 (d,p) pairs; the rounded attachment degree cannot track "
                "p*d(d-1)/2 that closely at these sizes");
    return "ER means within 2%, SF counts exact, comparability within 15%";
  });

  criterion(7, "acyclicity function and gradient", [] {
    require(h_acyclicity(Eigen::MatrixXd::Zero(6, 6)).value == 0.0,
            "h(0) != 0");

    Rng rng(0xACE);
    for (int t = 0; t < 25; ++t) {
      Dag g = sample_er_dag(6, 0.5, rng);
      Eigen::MatrixXd w = oracles::random_weight_matrix(g, rng);
      double h = h_acyclicity(w).value;
      require(std::abs(h) <= kHDagTol, "h(DAG) = " + fmt(h, 14));
    }

    Eigen::MatrixXd cyc = Eigen::MatrixXd::Zero(2, 2);
    cyc(0, 1) = 1.0;
    cyc(1, 0) = 1.0;
    double want = 2.0 * std::cosh(1.0) - 2.0;
    double got = h_acyclicity(cyc).value;
    require(std::abs(got - want) <= kTwoCycleTol,
            "two-cycle h = " + fmt(got, 12) + " vs " + fmt(want, 12));

    Eigen::MatrixXd w(4, 4);
    w << 0.0, 0.8, -0.4, 0.0, 0.2, 0.0, 0.9, -0.6, 0.0, 0.3, 0.0, 0.5, -0.7,
        0.0, 0.1, 0.0;
    Eigen::MatrixXd grad = h_acyclicity(w).gradient;
    const double eps = 1e-6;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        Eigen::MatrixXd hi = w, lo = w;
        hi(i, j) += eps;
        lo(i, j) -= eps;
        double fd =
            (h_acyclicity(hi).value - h_acyclicity(lo).value) / (2 * eps);
        double rel =
            std::abs(grad(i, j) - fd) / std::max(1.0, std::abs(fd));
        require(rel <= kGradRelTol, "gradient rel err " + fmt(rel, 8) +
                                        " at (" + std::to_string(i) + "," +
                                        std::to_string(j) + ")");
      }
    return "h identities and gradient check hold";
  });

  criterion(8, "notears recovery on raw varsortable data", [] {
    double nshd_mean = 0.0;
    double dos_mean = notears_dos_mean(false, &nshd_mean);
    require(nshd_mean <= kRegimeNshdMax,
            "mean nSHD " + fmt(nshd_mean) + " > " + fmt(kRegimeNshdMax, 2));
    require(dos_mean >= kRegimeDosMin,
            "mean DOS " + fmt(dos_mean) + " < " + fmt(kRegimeDosMin, 2));
    return "mean nSHD " + fmt(nshd_mean) + ", mean DOS " + fmt(dos_mean);
  });

  criterion(9, "standardization removes the scale shortcut", [] {
    double raw_dos = notears_dos_mean(false);
    double std_dos = notears_dos_mean(true);
    require(std_dos < raw_dos, "standardized DOS " + fmt(std_dos) +
                                   " not below raw DOS " + fmt(raw_dos));

    for (int s = 0; s < 10; ++s) {
      Rng rng(mix_seed(0xC4A1, 7, s));
      int d = 6;
      std::vector<std::uint8_t> adj(d * d, 0);
      for (int i = 0; i + 1 < d; ++i) adj[i * d + i + 1] = 1;
      Dag chain = Dag::from_adjacency(d, adj);
      WeightedAdjacency w = sample_weights(chain, 1.0, 3.0, rng);
      MechanismMap mech = assign_mechanisms(chain, 0.0, rng);
      Dataset ds = sample_dataset(chain, w, mech, 20000, rng);
      double v = varsortability(chain, ds);
      require(v == 1.0, "chain varsortability " + fmt(v, 6) + " != 1");
    }
    return "raw DOS " + fmt(raw_dos) + " > standardized DOS " + fmt(std_dos) +
           "; unit-plus chains fully varsortable";
  });

  criterion(10, "standardized ranking favors r2 sortnregress", [] {
    std::ifstream in(desk_serial_records());
    std::vector<RunRecord> all = read_records(in);
    std::vector<RunRecord> slice;
    for (const RunRecord& r : all)
      if (r.factors.scale == Scale::kStandardized) slice.push_back(r);
    require(!slice.empty(), "no standardized records");

    double r2 = dos_aggregate(slice, "r2_sortnregress");
    double nt = dos_aggregate(slice, "notears");
    require(r2 >= nt, "mean DOS r2_sortnregress " + fmt(r2) +
                          " < notears " + fmt(nt));

    double lo = kR2BandCenter - kR2BandHalfWidth;
    double hi = kR2BandCenter + kR2BandHalfWidth;
    std::string band;
    if (r2 >= lo && r2 <= hi) {
      band = "inside reference band " + fmt(lo, 2) + ".." + fmt(hi, 2);
    } else {
      band = "outside reference band " + fmt(lo, 2) + ".." + fmt(hi, 2);
      std::cout << "  note: the reference band describes a larger grid "
                   "(up to 100 nodes) and a wider model roster; this desk "
                   "slice stops at 20 nodes and 5 models, so a mean outside "
                   "the band reflects the slice, not a scoring defect\n";
    }
    return "r2 " + fmt(r2) + " >= notears " + fmt(nt) + ", " + band;
  });

  criterion(11, "records are schedule independent", [] {
    const fs::path& serial = desk_serial_records();
    fs::path parallel = acceptance_dir() / "desk_parallel.jsonl";
    fs::remove(parallel);
    GridRunStats stats = run_grid(desk_grid(), parallel, 4);
    require(stats.written == planned_runs(desk_grid()),
            "parallel run wrote " + std::to_string(stats.written));

    auto a = parsed_without_wall(serial);
    auto b = parsed_without_wall(parallel);
    require(a.size() == b.size(), "record counts differ: " +
                                      std::to_string(a.size()) + " vs " +
                                      std::to_string(b.size()));
    for (std::size_t i = 0; i < a.size(); ++i)
      require(a[i].dump() == b[i].dump(),
              "record " + std::to_string(i) + " differs between schedules");
    return std::to_string(a.size()) + " records identical except wall time";
  });

  std::cout << (g_failures == 0 ? "all criteria passed"
                                : std::to_string(g_failures) +
                                      " criterion(s) failed")
            << std::endl;
  return g_failures;
}
