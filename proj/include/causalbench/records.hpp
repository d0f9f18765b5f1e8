#pragma once

// Run records: one JSON object per (cell, replicate, model) execution,
// stored as JSON-lines. Doubles round-trip exactly through nlohmann's
// shortest representation, so identical runs produce identical lines.

#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "causalbench/graph.hpp"
#include "causalbench/metrics.hpp"
#include "causalbench/scm.hpp"

namespace causalbench {

inline constexpr const char* kRunRecordSchema = "causalbench-run/1";

inline std::string kind_name(GraphKind k) {
  return k == GraphKind::kEr ? "ER" : "SF";
}

inline GraphKind parse_kind(const std::string& s) {
  if (s == "ER") return GraphKind::kEr;
  if (s == "SF") return GraphKind::kSf;
  throw std::invalid_argument("unknown graph kind: " + s);
}

inline std::string scale_name(Scale s) {
  return s == Scale::kOriginal ? "original" : "standardized";
}

inline Scale parse_scale(const std::string& s) {
  if (s == "original") return Scale::kOriginal;
  if (s == "standardized") return Scale::kStandardized;
  throw std::invalid_argument("unknown scale: " + s);
}

struct FactorSettings {
  int sample_size = 0;
  int nodes = 0;
  GraphKind graph = GraphKind::kEr;
  double connectivity = 0.0;
  double relu_fraction = 0.0;
  double w_upper = 0.0;
  Scale scale = Scale::kOriginal;
};

struct RunRecord {
  int cell_id = -1;
  int base_id = -1;
  int replicate = -1;
  std::uint64_t seed = 0;
  FactorSettings factors;
  std::string model;
  std::string status = "ok";  // "ok" | "failed"
  std::string error;          // nonempty only when failed
  double wall_ms = 0.0;
  double varsortability = std::numeric_limits<double>::quiet_NaN();
  // Valid only when status == "ok":
  ConfusionCounts counts;
  int shd = 0;
  int cod = 0;
  int sid = 0;
  MetricVector metrics;
  double dos = std::numeric_limits<double>::quiet_NaN();

  bool ok() const { return status == "ok"; }
  std::string key() const {
    return std::to_string(cell_id) + ":" + std::to_string(replicate) + ":" + model;
  }
};

// Names in the order the report factors are enumerated; "model" is a valid
// extra grouping dimension for conditional means but is not a factor here.
inline const std::vector<std::string>& factor_names() {
  static const std::vector<std::string> names = {
      "sample_size", "nodes",   "graph", "connectivity",
      "relu_fraction", "w_upper", "scale"};
  return names;
}

// Canonical textual level, shared by reports and grouping keys.
inline std::string factor_level(const FactorSettings& f, const std::string& name) {
  char buf[32];
  if (name == "sample_size") return std::to_string(f.sample_size);
  if (name == "nodes") return std::to_string(f.nodes);
  if (name == "graph") return kind_name(f.graph);
  if (name == "scale") return scale_name(f.scale);
  double v = 0.0;
  if (name == "connectivity") v = f.connectivity;
  else if (name == "relu_fraction") v = f.relu_fraction;
  else if (name == "w_upper") v = f.w_upper;
  else throw std::invalid_argument("unknown factor: " + name);
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

inline std::string factor_level(const RunRecord& r, const std::string& name) {
  if (name == "model") return r.model;
  return factor_level(r.factors, name);
}

namespace detail {

inline nlohmann::json number_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

inline double number_from(const nlohmann::json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  return j.get<double>();
}

}  // namespace detail

inline nlohmann::json to_json(const RunRecord& r) {
  nlohmann::json j;
  j["schema"] = kRunRecordSchema;
  j["cell_id"] = r.cell_id;
  j["base_id"] = r.base_id;
  j["replicate"] = r.replicate;
  j["seed"] = r.seed;
  j["factors"] = {
      {"sample_size", r.factors.sample_size},
      {"nodes", r.factors.nodes},
      {"graph", kind_name(r.factors.graph)},
      {"connectivity", r.factors.connectivity},
      {"relu_fraction", r.factors.relu_fraction},
      {"w_upper", r.factors.w_upper},
      {"scale", scale_name(r.factors.scale)},
  };
  j["model"] = r.model;
  j["status"] = r.status;
  j["error"] = r.error.empty() ? nlohmann::json(nullptr) : nlohmann::json(r.error);
  j["wall_ms"] = r.wall_ms;
  j["varsortability"] = detail::number_or_null(r.varsortability);
  if (r.ok()) {
    j["counts"] = {
        {"tp_dir", r.counts.tp_dir},   {"fp_skel", r.counts.fp_skel},
        {"missing", r.counts.missing}, {"reversed", r.counts.reversed},
        {"t_true", r.counts.t_true},   {"e_est", r.counts.e_est},
    };
    j["raw"] = {{"shd", r.shd}, {"cod", r.cod}, {"sid", r.sid}};
    j["metrics"] = {
        {"tpr", r.metrics.tpr},   {"fpr", r.metrics.fpr},
        {"nshd", r.metrics.nshd}, {"f1", r.metrics.f1},
        {"ncod", r.metrics.ncod}, {"nsid", r.metrics.nsid},
    };
    j["dos"] = r.dos;
  } else {
    j["counts"] = nullptr;
    j["raw"] = nullptr;
    j["metrics"] = nullptr;
    j["dos"] = nullptr;
  }
  return j;
}

inline RunRecord record_from_json(const nlohmann::json& j) {
  if (j.at("schema").get<std::string>() != kRunRecordSchema)
    throw std::invalid_argument("unsupported record schema");
  RunRecord r;
  r.cell_id = j.at("cell_id").get<int>();
  r.base_id = j.at("base_id").get<int>();
  r.replicate = j.at("replicate").get<int>();
  r.seed = j.at("seed").get<std::uint64_t>();
  const auto& f = j.at("factors");
  r.factors.sample_size = f.at("sample_size").get<int>();
  r.factors.nodes = f.at("nodes").get<int>();
  r.factors.graph = parse_kind(f.at("graph").get<std::string>());
  r.factors.connectivity = f.at("connectivity").get<double>();
  r.factors.relu_fraction = f.at("relu_fraction").get<double>();
  r.factors.w_upper = f.at("w_upper").get<double>();
  r.factors.scale = parse_scale(f.at("scale").get<std::string>());
  r.model = j.at("model").get<std::string>();
  r.status = j.at("status").get<std::string>();
  if (!j.at("error").is_null()) r.error = j.at("error").get<std::string>();
  r.wall_ms = j.at("wall_ms").get<double>();
  r.varsortability = detail::number_from(j.at("varsortability"));
  if (r.ok()) {
    const auto& c = j.at("counts");
    r.counts.tp_dir = c.at("tp_dir").get<int>();
    r.counts.fp_skel = c.at("fp_skel").get<int>();
    r.counts.missing = c.at("missing").get<int>();
    r.counts.reversed = c.at("reversed").get<int>();
    r.counts.t_true = c.at("t_true").get<int>();
    r.counts.e_est = c.at("e_est").get<int>();
    r.counts.d = r.factors.nodes;
    const auto& raw = j.at("raw");
    r.shd = raw.at("shd").get<int>();
    r.cod = raw.at("cod").get<int>();
    r.sid = raw.at("sid").get<int>();
    const auto& m = j.at("metrics");
    r.metrics.tpr = m.at("tpr").get<double>();
    r.metrics.fpr = m.at("fpr").get<double>();
    r.metrics.nshd = m.at("nshd").get<double>();
    r.metrics.f1 = m.at("f1").get<double>();
    r.metrics.ncod = m.at("ncod").get<double>();
    r.metrics.nsid = m.at("nsid").get<double>();
    r.dos = j.at("dos").get<double>();
  }
  return r;
}

inline std::string record_line(const RunRecord& r) { return to_json(r).dump(); }

inline std::vector<RunRecord> read_records(std::istream& is) {
  std::vector<RunRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(record_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error("records line " + std::to_string(lineno) + ": " +
                               e.what());
    }
  }
  return out;
}

// Flat single-evaluation output for the `evaluate` CLI verb.
inline nlohmann::json evaluation_json(const Evaluation& ev, double vsort) {
  nlohmann::json j;
  j["schema"] = "causalbench-eval/1";
  j["tp_dir"] = ev.counts.tp_dir;
  j["fp_skel"] = ev.counts.fp_skel;
  j["missing"] = ev.counts.missing;
  j["reversed"] = ev.counts.reversed;
  j["t_true"] = ev.counts.t_true;
  j["e_est"] = ev.counts.e_est;
  j["shd"] = ev.shd;
  j["cod"] = ev.cod;
  j["sid"] = ev.sid;
  j["tpr"] = ev.metrics.tpr;
  j["fpr"] = ev.metrics.fpr;
  j["nshd"] = ev.metrics.nshd;
  j["f1"] = ev.metrics.f1;
  j["ncod"] = ev.metrics.ncod;
  j["nsid"] = ev.metrics.nsid;
  j["varsortability"] = detail::number_or_null(vsort);
  return j;
}

inline void write_evaluation_csv(std::ostream& os, const Evaluation& ev,
                                 double vsort) {
  os << "tp_dir,fp_skel,missing,reversed,t_true,e_est,shd,cod,sid,"
        "tpr,fpr,nshd,f1,ncod,nsid,varsortability\n";
  os << ev.counts.tp_dir << ',' << ev.counts.fp_skel << ',' << ev.counts.missing
     << ',' << ev.counts.reversed << ',' << ev.counts.t_true << ','
     << ev.counts.e_est << ',' << ev.shd << ',' << ev.cod << ',' << ev.sid;
  const double vals[] = {ev.metrics.tpr,  ev.metrics.fpr,  ev.metrics.nshd,
                         ev.metrics.f1,   ev.metrics.ncod, ev.metrics.nsid};
  for (double v : vals) os << ',' << detail::format_double(v);
  os << ',' << (std::isfinite(vsort) ? detail::format_double(vsort) : "") << '\n';
}

}  // namespace causalbench
