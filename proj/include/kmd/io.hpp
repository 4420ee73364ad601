#pragma once

#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "kmd/asymptotics.hpp"
#include "kmd/error.hpp"
#include "kmd/estimator.hpp"
#include "kmd/harness.hpp"

namespace kmd {

inline constexpr int kReportSchemaVersion = 1;

struct IngestResult {
  LabeledDataset dataset;
  std::vector<std::string> class_names;  // class index -> original label
};

namespace io_detail {

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInputError("cannot open file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    std::string t = trim(line);
    if (!t.empty()) lines.push_back(t);
  }
  return lines;
}

inline std::optional<double> parse_double(const std::string& s) {
  const char* begin = s.data();
  const char* end = begin + s.size();
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

// Labels that are exactly the integers 1..M keep their values; everything
// else maps by first appearance. Returns (index per row, names).
inline std::pair<std::vector<int>, std::vector<std::string>> map_labels(
    const std::vector<std::string>& raw) {
  bool integers = true;
  long max_val = 0;
  std::vector<long> parsed(raw.size());
  for (std::size_t i = 0; i < raw.size() && integers; ++i) {
    try {
      std::size_t pos = 0;
      parsed[i] = std::stol(raw[i], &pos);
      integers = pos == raw[i].size() && parsed[i] >= 1;
      max_val = std::max(max_val, parsed[i]);
    } catch (...) {
      integers = false;
    }
  }
  if (integers && max_val >= 1 && max_val <= 4096) {
    std::vector<bool> present(max_val, false);
    for (long v : parsed) present[v - 1] = true;
    bool contiguous = true;
    for (bool p : present) contiguous = contiguous && p;
    if (contiguous) {
      std::vector<int> labels(raw.size());
      for (std::size_t i = 0; i < raw.size(); ++i)
        labels[i] = static_cast<int>(parsed[i] - 1);
      std::vector<std::string> names(max_val);
      for (long v = 1; v <= max_val; ++v) names[v - 1] = std::to_string(v);
      return {labels, names};
    }
  }
  std::map<std::string, int> index;
  std::vector<std::string> names;
  std::vector<int> labels(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    auto it = index.find(raw[i]);
    if (it == index.end()) {
      it = index.emplace(raw[i], static_cast<int>(names.size())).first;
      names.push_back(raw[i]);
    }
    labels[i] = it->second;
  }
  return {labels, names};
}

}  // namespace io_detail

// CSV with a header; one column named `label`, the rest numeric
// coordinates. Errors name the offending row.
inline IngestResult ingest_points_csv(const std::string& path) {
  auto lines = io_detail::read_lines(path);
  if (lines.size() < 2)
    throw InvalidInputError(path + ": need a header and at least one row");
  auto header = io_detail::split_csv_line(lines[0]);
  int label_col = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "label") {
      if (label_col >= 0)
        throw InvalidInputError(path + ": multiple label columns");
      label_col = static_cast<int>(c);
    }
  }
  if (label_col < 0)
    throw InvalidInputError(path + ": no column named 'label'");
  int dim = static_cast<int>(header.size()) - 1;
  if (dim < 1) throw InvalidInputError(path + ": no coordinate columns");

  int n = static_cast<int>(lines.size()) - 1;
  std::vector<double> coords;
  coords.reserve(static_cast<std::size_t>(n) * dim);
  std::vector<std::string> raw_labels;
  raw_labels.reserve(n);
  for (int r = 0; r < n; ++r) {
    auto cells = io_detail::split_csv_line(lines[r + 1]);
    if (cells.size() != header.size())
      throw InvalidInputError(path + ": row " + std::to_string(r + 1) +
                              " has " + std::to_string(cells.size()) +
                              " cells, expected " +
                              std::to_string(header.size()));
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (static_cast<int>(c) == label_col) {
        raw_labels.push_back(cells[c]);
        continue;
      }
      auto v = io_detail::parse_double(cells[c]);
      if (!v || !std::isfinite(*v))
        throw InvalidInputError(path + ": non-numeric coordinate '" +
                                cells[c] + "' in row " +
                                std::to_string(r + 1));
      coords.push_back(*v);
    }
  }
  auto [labels, names] = io_detail::map_labels(raw_labels);
  int m = static_cast<int>(names.size());
  if (m < 2)
    throw InvalidInputError(path + ": only one class present");
  return {LabeledDataset(PointSet::from_points(n, dim, std::move(coords)),
                         std::move(labels), m),
          std::move(names)};
}

// Headerless numeric n x n matrix plus a labels file with n entries (one
// per line, or a single-column CSV with optional `label` header).
inline IngestResult ingest_distance_csv(const std::string& matrix_path,
                                        const std::string& labels_path,
                                        double tol = 1e-9) {
  auto lines = io_detail::read_lines(matrix_path);
  int n = static_cast<int>(lines.size());
  if (n < 2) throw InvalidInputError(matrix_path + ": need at least 2 rows");
  std::vector<double> dist(static_cast<std::size_t>(n) * n);
  for (int r = 0; r < n; ++r) {
    auto cells = io_detail::split_csv_line(lines[r]);
    if (static_cast<int>(cells.size()) != n)
      throw InvalidInputError(matrix_path + ": row " + std::to_string(r + 1) +
                              " has " + std::to_string(cells.size()) +
                              " cells, expected " + std::to_string(n));
    for (int c = 0; c < n; ++c) {
      auto v = io_detail::parse_double(cells[c]);
      if (!v)
        throw InvalidInputError(matrix_path + ": non-numeric entry '" +
                                cells[c] + "' in row " +
                                std::to_string(r + 1));
      dist[static_cast<std::size_t>(r) * n + c] = *v;
    }
  }

  auto label_lines = io_detail::read_lines(labels_path);
  if (!label_lines.empty() && label_lines[0] == "label")
    label_lines.erase(label_lines.begin());
  if (static_cast<int>(label_lines.size()) != n)
    throw InvalidInputError(labels_path + ": got " +
                            std::to_string(label_lines.size()) +
                            " labels for " + std::to_string(n) + " points");
  auto [labels, names] = io_detail::map_labels(label_lines);
  int m = static_cast<int>(names.size());
  if (m < 2) throw InvalidInputError(labels_path + ": only one class present");
  return {LabeledDataset(PointSet::from_distances(n, std::move(dist), tol),
                         std::move(labels), m),
          std::move(names)};
}

inline void write_points_csv(const LabeledDataset& data,
                             const std::vector<std::string>& names,
                             const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInputError("cannot write file: " + path);
  out.precision(17);
  int dim = data.points().dim();
  for (int t = 0; t < dim; ++t) out << "x" << (t + 1) << ",";
  out << "label\n";
  for (int i = 0; i < data.size(); ++i) {
    for (int t = 0; t < dim; ++t) out << data.points().row(i)[t] << ",";
    out << names[data.labels()[i]] << "\n";
  }
}

inline void write_distance_csv(const LabeledDataset& data,
                               const std::vector<std::string>& names,
                               const std::string& matrix_path,
                               const std::string& labels_path) {
  std::ofstream out(matrix_path);
  if (!out) throw InvalidInputError("cannot write file: " + matrix_path);
  out.precision(17);
  int n = data.size();
  const auto& d = data.points().distance_matrix();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j)
      out << d[static_cast<std::size_t>(i) * n + j] << (j + 1 < n ? "," : "");
    out << "\n";
  }
  std::ofstream lab(labels_path);
  if (!lab) throw InvalidInputError("cannot write file: " + labels_path);
  for (int i = 0; i < n; ++i) lab << names[data.labels()[i]] << "\n";
}

// ---- JSON serialization ----

inline nlohmann::json report_to_json(const KmdReport& report,
                                     const std::vector<std::string>& names) {
  nlohmann::json j;
  j["schema_version"] = kReportSchemaVersion;
  j["eta_hat"] = report.eta;
  j["numerator"] = report.numerator;
  j["denominator"] = report.denominator;
  j["a_tilde"] = report.abc.a;
  j["b_tilde"] = report.abc.b;
  j["c_tilde"] = report.abc.c;
  j["g1_tilde"] = report.stats.g1;
  j["g2_tilde"] = report.stats.g2;
  j["g3_tilde"] = report.stats.g3;
  j["perm_variance"] = report.perm_variance;
  j["z"] = report.z;
  j["p_asymptotic"] = report.p_asymptotic;
  if (report.p_permutation.has_value())
    j["p_permutation"] = *report.p_permutation;
  else
    j["p_permutation"] = nullptr;
  j["n_permutations"] = report.n_permutations;
  j["seed"] = report.seed;
  j["n"] = report.n;
  j["counts"] = report.counts;
  j["classes"] = names;
  j["graph"] = to_string(report.graph);
  j["k"] = report.k;
  j["max_total_degree"] = report.max_total_degree;
  j["degree_bound_exceeded"] = report.degree_bound_exceeded;
  return j;
}

inline nlohmann::json graph_to_json(const DirectedGeometricGraph& graph) {
  nlohmann::json j;
  j["n"] = graph.size();
  j["kind"] = to_string(graph.kind());
  j["k"] = graph.k();
  std::vector<std::vector<int>> adj(graph.size());
  for (int i = 0; i < graph.size(); ++i) {
    auto row = graph.out_neighbors(i);
    adj[i].assign(row.begin(), row.end());
  }
  j["out_neighbors"] = adj;
  j["max_total_degree"] = graph.max_total_degree();
  return j;
}

inline nlohmann::json constants_to_json(const NullConstants& c) {
  nlohmann::json j;
  j["graph"] = to_string(c.kind);
  j["k"] = c.k;
  j["d"] = c.d;
  j["g1"] = c.g1;
  j["g2"] = c.g2;
  j["g3"] = c.g3;
  j["se1"] = c.se1;
  j["se2"] = c.se2;
  j["se3"] = c.se3;
  j["reps"] = c.reps;
  j["resampled"] = c.resampled;
  j["window_volume"] = c.window_volume;
  j["seed"] = c.seed;
  return j;
}

inline NullConstants constants_from_json(const nlohmann::json& j) {
  NullConstants c;
  std::string kind = j.at("graph");
  if (kind == "knn")
    c.kind = GraphKind::knn_directed;
  else if (kind == "knn-undirected")
    c.kind = GraphKind::knn_undirected;
  else if (kind == "mst")
    c.kind = GraphKind::mst;
  else
    throw InvalidInputError("unknown graph kind in cache: " + kind);
  c.k = j.at("k");
  c.d = j.at("d");
  c.g1 = j.at("g1");
  c.g2 = j.at("g2");
  c.g3 = j.at("g3");
  c.se1 = j.at("se1");
  c.se2 = j.at("se2");
  c.se3 = j.at("se3");
  c.reps = j.at("reps");
  c.resampled = j.at("resampled");
  c.window_volume = j.at("window_volume");
  c.seed = j.at("seed");
  return c;
}

inline std::string constants_cache_key(GraphKind kind, int k, int d,
                                       long reps, std::uint64_t seed) {
  return std::string(to_string(kind)) + ":k=" + std::to_string(k) +
         ":d=" + std::to_string(d) + ":R=" + std::to_string(reps) +
         ":seed=" + std::to_string(seed);
}

// ---- study tables ----

inline std::string power_study_csv(const PowerStudy& study) {
  std::ostringstream out;
  out.precision(12);
  out << "scenario,d,param,power,reps\n";
  for (const auto& row : study.rows)
    out << to_string(study.scenario) << "," << study.d << "," << row.param
        << "," << row.power << "," << row.reps << "\n";
  return out.str();
}

inline std::string threshold_study_csv(const ThresholdStudy& study) {
  std::ostringstream out;
  out.precision(12);
  out << "d,n_total,pi1,k,b,power,reps\n";
  for (const auto& row : study.rows)
    out << study.d << "," << study.n_total << "," << study.pi1 << ","
        << row.k << "," << row.b << "," << row.power << "," << study.reps
        << "\n";
  return out.str();
}

inline std::string k_study_csv(const KStudy& study) {
  std::ostringstream out;
  out.precision(12);
  out << "k,mean_eta,mse,eta_true,reps\n";
  for (const auto& row : study.rows)
    out << row.k << "," << row.mean_eta << "," << row.mse << ","
        << study.eta_true << "," << study.reps << "\n";
  return out.str();
}

inline std::string null_clt_csv(const std::vector<NullCltRow>& rows) {
  std::ostringstream out;
  out.precision(12);
  out << "per_class,ks_distance,mean_z,sd_z,rejection_rate,reps\n";
  for (const auto& row : rows)
    out << row.per_class << "," << row.ks_distance << "," << row.mean_z << ","
        << row.sd_z << "," << row.rejection_rate << ","
        << row.z_scores.size() << "\n";
  return out.str();
}

inline std::string convergence_csv(const ConvergenceTable& table) {
  std::ostringstream out;
  out.precision(12);
  out << "n,mean_g1,mean_g2,mean_g3,mc_g1,mc_g2,mc_g3,mc_se3\n";
  for (const auto& row : table.rows)
    out << row.n << "," << row.mean_g1 << "," << row.mean_g2 << ","
        << row.mean_g3 << "," << table.reference.g1 << ","
        << table.reference.g2 << "," << table.reference.g3 << ","
        << table.reference.se3 << "\n";
  return out.str();
}

inline void write_text_file(const std::string& path,
                            const std::string& content) {
  std::ofstream out(path);
  if (!out) throw InvalidInputError("cannot write file: " + path);
  out << content;
}

}  // namespace kmd
