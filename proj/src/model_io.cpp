#include "bioexp/model_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "bioexp/errors.hpp"

namespace bioexp {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

json parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InputError("invalid JSON in " + path + ": " + e.what());
  }
  return j;
}

std::vector<std::string> read_labels(const json& j, const char* key,
                                     const std::string& path) {
  if (!j.contains(key) || !j[key].is_array() || j[key].empty())
    throw InputError(path + ": missing or empty \"" + key + "\" array");
  std::vector<std::string> labels;
  for (const auto& v : j[key]) {
    if (!v.is_string())
      throw InputError(path + ": \"" + key + "\" entries must be strings");
    labels.push_back(v.get<std::string>());
  }
  return labels;
}

std::vector<std::vector<double>> read_matrix(const json& j, const char* key,
                                             std::size_t rows, std::size_t cols,
                                             const std::string& path) {
  if (!j.contains(key) || !j[key].is_array() || j[key].size() != rows)
    throw InputError(path + ": \"" + std::string(key) + "\" must have " +
                     std::to_string(rows) + " rows");
  std::vector<std::vector<double>> m;
  for (const auto& row : j[key]) {
    if (!row.is_array() || row.size() != cols)
      throw InputError(path + ": every \"" + std::string(key) +
                       "\" row must have " + std::to_string(cols) + " entries");
    std::vector<double> r;
    for (const auto& v : row) {
      if (!v.is_number())
        throw InputError(path + ": probabilities must be numbers");
      double d = v.get<double>();
      if (!std::isfinite(d) || d < -1e-15)
        throw InputError(path + ": probabilities must be finite and >= 0");
      r.push_back(std::max(0.0, d));
    }
    m.push_back(std::move(r));
  }
  return m;
}

// Accept within 1e-9, renormalize with a warning within 1e-6, else reject.
void normalize_total(std::vector<double>& flat, const std::string& what,
                     std::vector<std::string>& warnings) {
  double sum = 0.0;
  for (double v : flat) sum += v;
  double err = std::abs(sum - 1.0);
  if (err <= 1e-9) return;
  if (err <= 1e-6) {
    for (double& v : flat) v /= sum;
    std::ostringstream os;
    os << what << " summed to " << format_sig12(sum)
       << "; renormalized (deviation within 1e-6)";
    warnings.push_back(os.str());
    return;
  }
  throw InputError(what + " must sum to 1 (got " + format_sig12(sum) + ")");
}

}  // namespace

LoadedModel load_source_model(const std::string& path) {
  json j = parse_file(path);
  std::vector<std::string> xl = read_labels(j, "x_labels", path);
  std::vector<std::string> yl = read_labels(j, "y_labels", path);
  auto rows = read_matrix(j, "p_xy", xl.size(), yl.size(), path);

  std::vector<double> flat;
  flat.reserve(xl.size() * yl.size());
  for (const auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
  std::vector<std::string> warnings;
  normalize_total(flat, path + ": p_xy", warnings);

  JointPmf joint(Alphabet{xl}, Alphabet{yl}, flat);
  return LoadedModel{SourceModel(std::move(joint)), std::move(warnings)};
}

void save_source_model(const SourceModel& model, const std::string& path) {
  ordered_json j;
  j["x_labels"] = model.joint().x_alphabet().labels;
  j["y_labels"] = model.joint().y_alphabet().labels;
  json rows = json::array();
  for (std::size_t x = 0; x < model.nx(); ++x) {
    json row = json::array();
    for (std::size_t y = 0; y < model.ny(); ++y) row.push_back(model.joint().at(x, y));
    rows.push_back(std::move(row));
  }
  j["p_xy"] = std::move(rows);
  write_json_file(path, j);
}

LoadedConditional load_conditional(const std::string& path) {
  json j = parse_file(path);
  std::vector<std::string> yl = read_labels(j, "y_labels", path);
  std::vector<std::string> xl = read_labels(j, "x_labels", path);
  auto rows = read_matrix(j, "p_x_given_y", yl.size(), xl.size(), path);

  std::vector<std::string> warnings;
  std::vector<Pmf> pmfs;
  Alphabet out{xl};
  for (std::size_t y = 0; y < rows.size(); ++y) {
    normalize_total(rows[y], path + ": p_x_given_y row " + std::to_string(y),
                    warnings);
    pmfs.emplace_back(out, rows[y]);
  }
  return LoadedConditional{ConditionalPmf(Alphabet{yl}, out, std::move(pmfs)),
                           std::move(warnings)};
}

void save_conditional(const ConditionalPmf& cond, const std::string& path) {
  ordered_json j;
  j["y_labels"] = cond.given_alphabet().labels;
  j["x_labels"] = cond.out_alphabet().labels;
  json rows = json::array();
  for (std::size_t y = 0; y < cond.rows(); ++y)
    rows.push_back(cond.row(y).probs());
  j["p_x_given_y"] = std::move(rows);
  write_json_file(path, j);
}

std::string format_sig12(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

void write_tradeoff_csv(const std::string& path, const std::vector<CsvRow>& rows) {
  auto field = [](const std::optional<double>& v) -> std::string {
    if (!v) return "";
    if (!std::isfinite(*v))
      throw NumericalConsistencyError("refusing to write a non-finite CSV value");
    return format_sig12(*v);
  };
  std::ostringstream os;
  os << "e0,e_fr_fixed,e_fr_variable,duality_gap_fixed,duality_gap_variable,"
        "flags\r\n";
  double prev = -std::numeric_limits<double>::infinity();
  for (const CsvRow& r : rows) {
    if (!std::isfinite(r.e0) || r.e0 <= prev)
      throw NumericalConsistencyError("CSV rows must be strictly increasing in e0");
    prev = r.e0;
    std::string flags;
    for (std::size_t i = 0; i < r.flags.size(); ++i) {
      if (i) flags += ';';
      flags += r.flags[i];
    }
    os << format_sig12(r.e0) << ',' << field(r.e_fr_fixed) << ','
       << field(r.e_fr_variable) << ',' << field(r.duality_gap_fixed) << ','
       << field(r.duality_gap_variable) << ',' << flags << "\r\n";
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write file: " + path);
  out << os.str();
}

namespace {

ordered_json json_or_null(double v) {
  return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr);
}

ordered_json json_or_null(const ExtReal& v) {
  return v.finite() ? ordered_json(v.value()) : ordered_json(nullptr);
}

ordered_json interval_json(const Interval& iv) {
  return ordered_json::array({json_or_null(iv.lo), json_or_null(iv.hi)});
}

}  // namespace

nlohmann::ordered_json sim_report_json(const SimReport& report) {
  ordered_json j;
  j["type"] = "sim_report";
  j["n"] = report.n;
  j["num_codes"] = report.num_codes;
  j["exact"] = report.exact;
  j["regime"] = report.regime == Regime::Fixed ? "fixed" : "variable";
  j["seed"] = report.seed;
  j["metric"] = report.metric_tag;
  j["p_fr"] = report.p_fr;
  j["p_fr_ci95"] = interval_json(report.fr_ci);
  j["p_fa"] = report.p_fa;
  j["p_fa_ci95"] = interval_json(report.fa_ci);
  j["fr_exponent"] = json_or_null(report.fr_exponent);
  j["fr_exponent_ci95"] = interval_json(report.fr_exponent_ci);
  j["fa_exponent"] = json_or_null(report.fa_exponent);
  j["fa_exponent_ci95"] = interval_json(report.fa_exponent_ci);
  j["per_code_fr"] = report.per_code_fr;
  j["per_code_fa"] = report.per_code_fa;
  return j;
}

void write_json_file(const std::string& path, const nlohmann::ordered_json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write file: " + path);
  out << j.dump(2) << '\n';
}

void write_manifest(const std::string& data_path, const RunManifest& manifest) {
  ordered_json j;
  j["type"] = "run_manifest";
  j["command"] = manifest.command;
  j["argv"] = manifest.argv;
  j["data_file"] = manifest.data_file;
  j["version"] = manifest.version;
  j["tol_duality"] = manifest.tol_duality;
  j["max_gap_fixed"] = manifest.max_gap_fixed
                           ? json_or_null(*manifest.max_gap_fixed)
                           : ordered_json(nullptr);
  j["max_gap_variable"] = manifest.max_gap_variable
                              ? json_or_null(*manifest.max_gap_variable)
                              : ordered_json(nullptr);
  j["seeds"] = manifest.seeds;
  j["wall_seconds"] = manifest.wall_seconds;
  write_json_file(data_path + ".manifest.json", j);
}

}  // namespace bioexp
