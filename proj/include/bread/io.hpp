#pragma once

#include <Eigen/Core>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "bread/ais.hpp"
#include "bread/protocol.hpp"
#include "bread/version.hpp"

namespace bread {

class io_error : public std::runtime_error {
  using std::runtime_error::runtime_error;
};
class csv_parse_error : public std::runtime_error {
  using std::runtime_error::runtime_error;
};
class integrity_error : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Lossless, locale-independent double formatting for CSV artifacts.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Dataset loading.

struct DatasetHandle {
  std::string source_path;
  std::vector<std::string> column_names;  // feature columns, in order
  std::string target_name;
  Eigen::MatrixXd features;  // standardized
  Eigen::VectorXd target;    // standardized
  Eigen::VectorXd feature_mean, feature_std;
  double target_mean = 0.0, target_std = 1.0;
  int rows_dropped = 0;

  int n() const { return static_cast<int>(features.rows()); }
  int d() const { return static_cast<int>(features.cols()); }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  for (auto& s : out) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.erase(s.begin());
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  }
  return out;
}

inline bool is_missing_cell(const std::string& s) {
  if (s.empty()) return true;
  std::string lower;
  for (char c : s) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return lower == "na" || lower == "nan" || lower == "null";
}

}  // namespace detail

// Load a CSV with a header row, drop rows with missing values, and
// standardize every column (features and target) to mean zero, unit standard
// deviation.
inline DatasetHandle load_csv_standardized(const std::string& path,
                                           const std::string& target_column) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open dataset: " + path);

  std::string line;
  if (!std::getline(in, line)) throw csv_parse_error(path + ": empty file");
  const std::vector<std::string> header = detail::split_csv_line(line);

  int target_index = -1;
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == target_column) target_index = static_cast<int>(i);
  if (target_index < 0)
    throw csv_parse_error(path + ": target column '" + target_column + "' not found");

  std::vector<std::vector<double>> rows;
  int dropped = 0;
  int line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size())
      throw csv_parse_error(path + ": row " + std::to_string(line_number) + " has " +
                            std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(header.size()));
    std::vector<double> row(cells.size());
    bool missing = false;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (detail::is_missing_cell(cells[c])) {
        missing = true;
        break;
      }
      char* end = nullptr;
      row[c] = std::strtod(cells[c].c_str(), &end);
      if (end == cells[c].c_str() || *end != '\0')
        throw csv_parse_error(path + ": non-numeric cell at row " + std::to_string(line_number) +
                              ", column '" + header[c] + "'");
      if (std::isnan(row[c])) missing = true;
    }
    if (missing) {
      ++dropped;
      continue;
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw csv_parse_error(path + ": no complete rows");

  const int n = static_cast<int>(rows.size());
  const int total_cols = static_cast<int>(header.size());
  DatasetHandle ds;
  ds.source_path = path;
  ds.target_name = target_column;
  ds.rows_dropped = dropped;
  ds.features.resize(n, total_cols - 1);
  ds.target.resize(n);

  int out_col = 0;
  for (int c = 0; c < total_cols; ++c) {
    Eigen::VectorXd col(n);
    for (int r = 0; r < n; ++r) col[r] = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    const double mean = col.mean();
    const double var = (col.array() - mean).square().sum() / static_cast<double>(n);
    if (var <= 0.0)
      throw csv_parse_error(path + ": column '" + header[static_cast<std::size_t>(c)] +
                            "' has zero variance");
    const double sd = std::sqrt(var);
    col = (col.array() - mean) / sd;
    if (c == target_index) {
      ds.target = col;
      ds.target_mean = mean;
      ds.target_std = sd;
    } else {
      ds.features.col(out_col) = col;
      ds.column_names.push_back(header[static_cast<std::size_t>(c)]);
      ds.feature_mean.conservativeResize(out_col + 1);
      ds.feature_std.conservativeResize(out_col + 1);
      ds.feature_mean[out_col] = mean;
      ds.feature_std[out_col] = sd;
      ++out_col;
    }
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Run records: content-addressed JSON snapshots of a run's configuration and
// summary outputs. The identifier hashes only the inputs (config), so
// identical configurations map to the same identifier; an integrity hash over
// the whole record catches corrupted files on load.

namespace detail {

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hash_hex(std::string_view s) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(s)));
  return buf;
}

}  // namespace detail

struct RunRecord {
  int schema_version = 1;
  nlohmann::json config;   // model, path, schedule, kernel, chains, stages, seeds
  nlohmann::json summary;  // per-chain final log weights and bound values
  std::string environment = std::string("bread ") + version_string;

  std::string identifier() const {
    nlohmann::json inputs{{"schema_version", schema_version}, {"config", config}};
    return detail::hash_hex(inputs.dump());
  }

  nlohmann::json to_json() const {
    return nlohmann::json{{"schema_version", schema_version},
                          {"config", config},
                          {"summary", summary},
                          {"environment", environment}};
  }

  static RunRecord from_json(const nlohmann::json& j) {
    RunRecord r;
    r.schema_version = j.at("schema_version").get<int>();
    r.config = j.at("config");
    r.summary = j.at("summary");
    r.environment = j.at("environment").get<std::string>();
    return r;
  }
};

inline void write_file_atomic(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw io_error("cannot write: " + tmp);
    out << contents;
  }
  std::filesystem::rename(tmp, path);
}

inline std::string persist_run(const RunRecord& record, const std::string& store_dir) {
  std::filesystem::create_directories(store_dir);
  const std::string id = record.identifier();
  nlohmann::json body = record.to_json();
  nlohmann::json file{{"record", body}, {"integrity", detail::hash_hex(body.dump())}};
  write_file_atomic(store_dir + "/" + id + ".json", file.dump(2) + "\n");
  return id;
}

inline RunRecord load_run(const std::string& store_dir, const std::string& id) {
  const std::string path = store_dir + "/" + id + ".json";
  std::ifstream in(path);
  if (!in) throw io_error("no such run record: " + path);
  nlohmann::json file;
  try {
    in >> file;
  } catch (const nlohmann::json::exception& e) {
    throw integrity_error(path + ": unreadable record: " + e.what());
  }
  if (!file.contains("record") || !file.contains("integrity"))
    throw integrity_error(path + ": missing integrity envelope");
  const std::string expect = file.at("integrity").get<std::string>();
  const std::string actual = detail::hash_hex(file.at("record").dump());
  if (expect != actual) throw integrity_error(path + ": integrity hash mismatch");
  return RunRecord::from_json(file.at("record"));
}

// ---------------------------------------------------------------------------
// JSON views of result types (artifacts carry no wall-clock data, so equal
// seeds give byte-identical files).

inline nlohmann::json to_json(const KernelSpec& k) {
  return nlohmann::json{{"kind", kernel_kind_name(k.kind)},
                        {"proposal_scale", k.proposal_scale},
                        {"hmc_step_size", k.hmc_step_size},
                        {"hmc_leapfrog", k.hmc_leapfrog},
                        {"steps_per_stage", k.steps_per_stage}};
}

inline nlohmann::json to_json(const BdmcResult& r) {
  return nlohmann::json{{"lower", r.lower},
                        {"upper", r.upper},
                        {"gap", r.gap},
                        {"chain_lower", r.chain_lower},
                        {"chain_upper", r.chain_upper},
                        {"forward_divergences", r.forward_divergences},
                        {"reverse_divergences", r.reverse_divergences},
                        {"shared_target_sample", r.shared_target_sample}};
}

inline nlohmann::json to_json(const BoundCurve& c) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& p : c.points)
    arr.push_back(nlohmann::json{{"stages", p.stages},
                                 {"bound", p.bound},
                                 {"direction", direction_name(p.direction)}});
  return arr;
}

inline nlohmann::json to_json(const ConsistencyMetrics& m) {
  return nlohmann::json{{"stages", m.stages},
                        {"residuals", m.residuals},
                        {"max_abs_residual", m.max_abs_residual},
                        {"remaining_real", m.remaining_real},
                        {"remaining_sim", m.remaining_sim},
                        {"threshold_nats", m.threshold_nats},
                        {"pass", m.pass}};
}

inline nlohmann::json to_json(const ProtocolConfig& c) {
  return nlohmann::json{{"stage_sweep", c.stage_sweep},
                        {"chains", c.chains},
                        {"refresh_steps", c.refresh_steps},
                        {"hyper_budget", c.hyper_budget},
                        {"fix_hyper_value", c.fix_hyper_value},
                        {"kernel", to_json(c.kernel)},
                        {"seed", c.seed},
                        {"consistency_threshold", c.consistency_threshold}};
}

inline nlohmann::json to_json(const BreadReport& r) {
  nlohmann::json gaps = nlohmann::json::array();
  for (const auto& [stages, gap] : r.gaps)
    gaps.push_back(nlohmann::json{{"stages", stages}, {"gap", gap}});
  nlohmann::json refresh = nlohmann::json::array();
  for (const auto& [steps, upper] : r.refresh_upper)
    refresh.push_back(nlohmann::json{{"refresh_steps", steps}, {"upper", upper}});
  return nlohmann::json{{"eta_real", r.eta_real},
                        {"eta_simulated", r.eta_simulated},
                        {"real_forward", to_json(r.real_forward)},
                        {"sim_forward", to_json(r.sim_forward)},
                        {"sim_reverse", to_json(r.sim_reverse)},
                        {"gaps", gaps},
                        {"refresh_upper", refresh},
                        {"consistency", to_json(r.consistency)},
                        {"config", to_json(r.config)},
                        {"shared_target_sample", r.shared_target_sample}};
}

}  // namespace bread
