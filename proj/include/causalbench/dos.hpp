#pragma once

// Distance-to-Opposite-Scenarios score: each six-metric result is placed
// between an all-best and an all-worst anchor vector and scored by its
// relative Euclidean distance to the bad anchor (1 = ideal, 0 = worst).
// Also the record-level aggregations the report verb emits: per-model
// ranking, per-factor delta-sum sensitivity, two-way conditional means.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <map>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "causalbench/records.hpp"

namespace causalbench {

enum class Objective { kMax, kMin };

struct ScenarioPair {
  std::array<double, 6> s_plus{};
  std::array<double, 6> s_minus{};
};

struct DosScore {
  double value = 0.0;
  double dist_plus = 0.0;
  double dist_minus = 0.0;
};

inline ScenarioPair scenarios(const std::vector<Objective>& objectives) {
  if (objectives.size() != 6)
    throw std::invalid_argument("scenarios: expected 6 objectives");
  ScenarioPair sc;
  for (std::size_t k = 0; k < 6; ++k) {
    bool maximize = objectives[k] == Objective::kMax;
    sc.s_plus[k] = maximize ? 1.0 : 0.0;
    sc.s_minus[k] = maximize ? 0.0 : 1.0;
  }
  return sc;
}

// [TPR max, FPR min, nSHD min, F1 max, nCOD min, nSID min], giving anchors
// s_plus = (1,0,0,1,0,0) and s_minus = (0,1,1,0,1,1).
inline ScenarioPair default_scenarios() {
  return scenarios({Objective::kMax, Objective::kMin, Objective::kMin,
                    Objective::kMax, Objective::kMin, Objective::kMin});
}

inline DosScore dos_single(const MetricVector& m, const ScenarioPair& sc) {
  std::vector<double> v = m.to_array();
  double dp = 0.0, dm = 0.0;
  for (std::size_t k = 0; k < 6; ++k) {
    if (!(v[k] >= 0.0 && v[k] <= 1.0))
      throw std::invalid_argument("dos_single: metric component outside [0,1]");
    dp += (v[k] - sc.s_plus[k]) * (v[k] - sc.s_plus[k]);
    dm += (v[k] - sc.s_minus[k]) * (v[k] - sc.s_minus[k]);
  }
  DosScore s;
  s.dist_plus = std::sqrt(dp);
  s.dist_minus = std::sqrt(dm);
  double denom = s.dist_plus + s.dist_minus;
  if (denom == 0.0)
    throw std::logic_error("dos_single: coincident anchors");
  s.value = s.dist_minus / denom;
  return s;
}

inline double dos_value(const MetricVector& m) {
  return dos_single(m, default_scenarios()).value;
}

inline double dos_aggregate(const std::vector<RunRecord>& records,
                            const std::string& model) {
  double sum = 0.0;
  int n = 0;
  for (const auto& r : records)
    if (r.model == model && r.ok()) {
      sum += r.dos;
      ++n;
    }
  if (n == 0)
    throw std::runtime_error("dos_aggregate: no successful records for model " +
                             model);
  return sum / n;
}

// Orders level strings numerically when both parse as numbers, else
// lexicographically, so report rows come out in a stable readable order.
inline bool level_less(const std::string& a, const std::string& b) {
  char* ea = nullptr;
  char* eb = nullptr;
  double va = std::strtod(a.c_str(), &ea);
  double vb = std::strtod(b.c_str(), &eb);
  bool na = ea != a.c_str() && *ea == '\0';
  bool nb = eb != b.c_str() && *eb == '\0';
  if (na && nb && va != vb) return va < vb;
  return a < b;
}

struct SensitivityGroup {
  std::string model;
  int replicate = -1;
  // (factor, level) for every factor except the target, in factor_names order.
  std::vector<std::pair<std::string, std::string>> context;
  double delta_sum = 0.0;
};

struct SensitivityTable {
  std::string factor;
  std::string baseline;
  std::vector<std::string> levels;  // observed levels, sorted, incl. baseline
  std::vector<SensitivityGroup> groups;
  int groups_total = 0;
  int groups_skipped = 0;  // groups missing a level (incl. failed fits)
};

// Groups records by (model, replicate, all factors but `factor`); within each
// complete group sums |DOS(level) - DOS(baseline)| over non-baseline levels.
// Groups missing any observed level (a failed fit drops its level) are
// skipped and counted, never imputed.
inline SensitivityTable factor_sensitivity(const std::vector<RunRecord>& records,
                                           const std::string& factor,
                                           const std::string& baseline) {
  SensitivityTable table;
  table.factor = factor;
  table.baseline = baseline;

  std::set<std::string> level_set;
  for (const auto& r : records) level_set.insert(factor_level(r, factor));
  if (!level_set.count(baseline))
    throw std::invalid_argument("factor_sensitivity: baseline level '" +
                                baseline + "' not present for " + factor);
  table.levels.assign(level_set.begin(), level_set.end());
  std::sort(table.levels.begin(), table.levels.end(), level_less);

  struct Group {
    std::string model;
    int replicate;
    std::vector<std::pair<std::string, std::string>> context;
    std::map<std::string, double> dos_by_level;
  };
  std::map<std::string, Group> groups;
  for (const auto& r : records) {
    if (!r.ok()) continue;
    std::string key = r.model + "\x1f" + std::to_string(r.replicate);
    std::vector<std::pair<std::string, std::string>> context;
    for (const auto& name : factor_names()) {
      if (name == factor) continue;
      std::string level = factor_level(r, name);
      key += "\x1f" + level;
      context.emplace_back(name, level);
    }
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) {
      it->second.model = r.model;
      it->second.replicate = r.replicate;
      it->second.context = std::move(context);
    }
    it->second.dos_by_level[factor_level(r, factor)] = r.dos;
  }

  table.groups_total = static_cast<int>(groups.size());
  for (auto& [key, g] : groups) {
    (void)key;
    bool complete = true;
    for (const auto& level : table.levels)
      if (!g.dos_by_level.count(level)) {
        complete = false;
        break;
      }
    if (!complete) {
      ++table.groups_skipped;
      continue;
    }
    SensitivityGroup out;
    out.model = g.model;
    out.replicate = g.replicate;
    out.context = g.context;
    double base = g.dos_by_level.at(baseline);
    for (const auto& level : table.levels)
      if (level != baseline)
        out.delta_sum += std::abs(g.dos_by_level.at(level) - base);
    table.groups.push_back(std::move(out));
  }
  return table;
}

// First/smallest level of each factor domain.
inline std::map<std::string, std::string> default_baselines() {
  return {{"sample_size", "2500"}, {"nodes", "10"},       {"graph", "ER"},
          {"connectivity", "0.2"}, {"relu_fraction", "0"}, {"w_upper", "1"},
          {"scale", "original"}};
}

struct ConditionalCell {
  std::string level_a;
  std::string level_b;
  double mean_dos = 0.0;
  int count = 0;
};

struct ConditionalMeans {
  std::string factor_a;
  std::string factor_b;
  std::vector<ConditionalCell> cells;  // populated cells only
};

inline ConditionalMeans conditional_means(const std::vector<RunRecord>& records,
                                          const std::string& factor_a,
                                          const std::string& factor_b) {
  std::map<std::pair<std::string, std::string>, std::pair<double, int>> acc;
  for (const auto& r : records) {
    if (!r.ok()) continue;
    auto& slot = acc[{factor_level(r, factor_a), factor_level(r, factor_b)}];
    slot.first += r.dos;
    slot.second += 1;
  }
  ConditionalMeans out;
  out.factor_a = factor_a;
  out.factor_b = factor_b;
  for (const auto& [key, slot] : acc) {
    ConditionalCell cell;
    cell.level_a = key.first;
    cell.level_b = key.second;
    cell.mean_dos = slot.first / slot.second;
    cell.count = slot.second;
    out.cells.push_back(std::move(cell));
  }
  std::sort(out.cells.begin(), out.cells.end(),
            [](const ConditionalCell& x, const ConditionalCell& y) {
              if (x.level_a != y.level_a) return level_less(x.level_a, y.level_a);
              return level_less(x.level_b, y.level_b);
            });
  return out;
}

// ---- report CSVs ----

struct ModelSummary {
  std::string model;
  int n_runs = 0;
  int n_failed = 0;
  bool has_metrics = false;  // at least one successful run
  double mean_dos = 0.0;
  std::array<double, 6> mean_metrics{};  // [tpr, fpr, nshd, f1, ncod, nsid]
  int rank_dos = 0;
  std::array<int, 6> metric_ranks{};
};

inline std::vector<ModelSummary> summarize_models(
    const std::vector<RunRecord>& records) {
  std::map<std::string, ModelSummary> by_model;
  std::map<std::string, std::array<double, 7>> sums;  // 6 metrics + dos
  for (const auto& r : records) {
    auto& s = by_model[r.model];
    s.model = r.model;
    ++s.n_runs;
    if (!r.ok()) {
      ++s.n_failed;
      continue;
    }
    auto& acc = sums[r.model];
    auto v = r.metrics.to_array();
    for (std::size_t k = 0; k < 6; ++k) acc[k] += v[k];
    acc[6] += r.dos;
  }
  std::vector<ModelSummary> out;
  for (auto& [name, s] : by_model) {
    int n_ok = s.n_runs - s.n_failed;
    if (n_ok > 0) {
      s.has_metrics = true;
      const auto& acc = sums[name];
      for (std::size_t k = 0; k < 6; ++k) s.mean_metrics[k] = acc[k] / n_ok;
      s.mean_dos = acc[6] / n_ok;
    }
    out.push_back(s);
  }

  // Rank 1 is best; metric direction matches the scenario anchors. Models
  // without any successful run sort last and keep rank 0 (blank in CSV).
  auto rank_by = [&out](auto value_of, bool higher_better, auto assign) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < out.size(); ++i)
      if (out[i].has_metrics) idx.push_back(i);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      double va = value_of(out[a]);
      double vb = value_of(out[b]);
      if (va != vb) return higher_better ? va > vb : va < vb;
      return out[a].model < out[b].model;
    });
    for (std::size_t r = 0; r < idx.size(); ++r)
      assign(out[idx[r]], static_cast<int>(r) + 1);
  };
  rank_by([](const ModelSummary& s) { return s.mean_dos; }, true,
          [](ModelSummary& s, int r) { s.rank_dos = r; });
  const bool higher_better[6] = {true, false, false, true, false, false};
  for (std::size_t k = 0; k < 6; ++k)
    rank_by([k](const ModelSummary& s) { return s.mean_metrics[k]; },
            higher_better[k],
            [k](ModelSummary& s, int r) { s.metric_ranks[k] = r; });

  std::sort(out.begin(), out.end(), [](const ModelSummary& a,
                                       const ModelSummary& b) {
    if (a.has_metrics != b.has_metrics) return a.has_metrics;
    if (a.has_metrics && a.rank_dos != b.rank_dos) return a.rank_dos < b.rank_dos;
    return a.model < b.model;
  });
  return out;
}

inline void write_ranking_csv(std::ostream& os,
                              const std::vector<RunRecord>& records) {
  static const char* metric_cols[6] = {"tpr", "fpr", "nshd", "f1", "ncod", "nsid"};
  os << "model,n_runs,n_failed,failure_rate,mean_dos,rank_dos";
  for (const char* m : metric_cols) os << ",mean_" << m << ",rank_" << m;
  os << '\n';
  for (const auto& s : summarize_models(records)) {
    double fail_rate = s.n_runs == 0 ? 0.0
                                     : static_cast<double>(s.n_failed) / s.n_runs;
    os << s.model << ',' << s.n_runs << ',' << s.n_failed << ','
       << detail::format_double(fail_rate);
    if (s.has_metrics) {
      os << ',' << detail::format_double(s.mean_dos) << ',' << s.rank_dos;
      for (std::size_t k = 0; k < 6; ++k)
        os << ',' << detail::format_double(s.mean_metrics[k]) << ','
           << s.metric_ranks[k];
    } else {
      for (int k = 0; k < 14; ++k) os << ',';
    }
    os << '\n';
  }
}

inline void write_sensitivity_csv(std::ostream& os,
                                  const SensitivityTable& table) {
  os << "model,replicate";
  for (const auto& name : factor_names())
    if (name != table.factor) os << ',' << name;
  os << ",delta_sum\n";
  std::vector<const SensitivityGroup*> rows;
  for (const auto& g : table.groups) rows.push_back(&g);
  std::sort(rows.begin(), rows.end(),
            [](const SensitivityGroup* a, const SensitivityGroup* b) {
              if (a->model != b->model) return a->model < b->model;
              if (a->replicate != b->replicate) return a->replicate < b->replicate;
              for (std::size_t k = 0; k < a->context.size(); ++k)
                if (a->context[k].second != b->context[k].second)
                  return level_less(a->context[k].second, b->context[k].second);
              return false;
            });
  for (const auto* g : rows) {
    os << g->model << ',' << g->replicate;
    for (const auto& [name, level] : g->context) {
      (void)name;
      os << ',' << level;
    }
    os << ',' << detail::format_double(g->delta_sum) << '\n';
  }
}

inline void write_sensitivity_summary_csv(
    std::ostream& os, const std::vector<SensitivityTable>& tables) {
  os << "factor,baseline,groups_total,groups_skipped,mean_delta_sum,"
        "min_delta_sum,max_delta_sum\n";
  for (const auto& t : tables) {
    os << t.factor << ',' << t.baseline << ',' << t.groups_total << ','
       << t.groups_skipped;
    if (t.groups.empty()) {
      os << ",,,\n";
      continue;
    }
    double sum = 0.0;
    double lo = t.groups.front().delta_sum;
    double hi = lo;
    for (const auto& g : t.groups) {
      sum += g.delta_sum;
      lo = std::min(lo, g.delta_sum);
      hi = std::max(hi, g.delta_sum);
    }
    os << ',' << detail::format_double(sum / t.groups.size()) << ','
       << detail::format_double(lo) << ',' << detail::format_double(hi) << '\n';
  }
}

inline void write_conditional_means_csv(std::ostream& os,
                                        const std::vector<ConditionalMeans>& tables) {
  os << "factor_a,level_a,factor_b,level_b,mean_dos,count\n";
  for (const auto& t : tables)
    for (const auto& c : t.cells)
      os << t.factor_a << ',' << c.level_a << ',' << t.factor_b << ','
         << c.level_b << ',' << detail::format_double(c.mean_dos) << ','
         << c.count << '\n';
}

}  // namespace causalbench
