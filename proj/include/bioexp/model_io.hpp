#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "bioexp/prob.hpp"
#include "bioexp/sim.hpp"

namespace bioexp {

// File formats: source models and conditional laws as JSON, curve sweeps as
// RFC-4180 CSV (CRLF, '.' decimal, 12 significant digits), reports as JSON.
// Data files are deterministic; timing lives only in the manifest sidecar.

struct LoadedModel {
  SourceModel model;
  std::vector<std::string> warnings;  // e.g. renormalization notices
};

// Schema: {"x_labels":[...], "y_labels":[...], "p_xy":[[...], ...]} with one
// row per X symbol. A total within 1e-9 of 1 is accepted as-is, within 1e-6
// it is renormalized with a warning, anything further off is an error.
LoadedModel load_source_model(const std::string& path);
void save_source_model(const SourceModel& model, const std::string& path);

struct LoadedConditional {
  ConditionalPmf cond;
  std::vector<std::string> warnings;
};

// Schema: {"y_labels":[...], "x_labels":[...], "p_x_given_y":[[...], ...]}
// with one row per Y symbol; per-row totals use the same tolerance policy.
LoadedConditional load_conditional(const std::string& path);
void save_conditional(const ConditionalPmf& cond, const std::string& path);

struct CsvRow {
  double e0 = 0.0;
  std::optional<double> e_fr_fixed;
  std::optional<double> e_fr_variable;
  std::optional<double> duality_gap_fixed;
  std::optional<double> duality_gap_variable;
  std::vector<std::string> flags;
};

// Fixed header e0,e_fr_fixed,e_fr_variable,duality_gap_fixed,
// duality_gap_variable,flags; absent values are empty fields; rows must be
// strictly increasing in e0 and all present values finite.
void write_tradeoff_csv(const std::string& path, const std::vector<CsvRow>& rows);

std::string format_sig12(double v);

nlohmann::ordered_json sim_report_json(const SimReport& report);
void write_json_file(const std::string& path, const nlohmann::ordered_json& j);

struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  std::string data_file;
  std::string version;
  double tol_duality = 0.0;
  std::optional<double> max_gap_fixed;
  std::optional<double> max_gap_variable;
  std::vector<std::uint64_t> seeds;
  double wall_seconds = 0.0;
};

// Writes <data_path>.manifest.json next to the artifact it describes.
void write_manifest(const std::string& data_path, const RunManifest& manifest);

}  // namespace bioexp
