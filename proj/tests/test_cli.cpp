// End-to-end tests for the command-line tool: each case launches the real
// binary in a subprocess and inspects exit codes, console output, and the
// files it writes.
#include "doctest.h"

#include "json.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const std::string kCli = BIOEXP_CLI_PATH;
const std::string kData = BIOEXP_DATA_DIR;

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

fs::path unique_dir() {
  static int counter = 0;
  fs::path dir = fs::temp_directory_path() /
                 ("bioexp_cli_test_" + std::to_string(::getpid()) + "_" +
                  std::to_string(counter++));
  fs::create_directories(dir);
  return dir;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

RunResult run_cli(const std::string& args, const fs::path& dir) {
  const fs::path out_path = dir / "stdout.txt";
  const fs::path err_path = dir / "stderr.txt";
  const std::string cmd = kCli + " " + args + " > " + out_path.string() +
                          " 2> " + err_path.string();
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_file(out_path);
  r.err = read_file(err_path);
  return r;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::istringstream in(text);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, ',')) fields.push_back(field);
    // A trailing comma means an empty final field.
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    rows.push_back(std::move(fields));
  }
  return rows;
}

const std::string kModelFlag = "--model " + kData + "/fig1.json";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("rates subcommand writes a report and a manifest") {
  const fs::path dir = unique_dir();
  const fs::path out = dir / "rates.json";
  const RunResult r = run_cli(
      "rates " + kModelFlag + " --e0 0.05 --h0 0.3 --out " + out.string(),
      dir);
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("maximum helper rate") != std::string::npos);

  const json report = json::parse(read_file(out));
  CHECK(report.at("type") == "rates_report");
  CHECK(report.at("e0").get<double>() == doctest::Approx(0.05));
  CHECK(report.at("max_helper_rate").at("value").get<double>() ==
        doctest::Approx(0.5621081750518979).epsilon(1e-9));
  CHECK(report.at("max_helper_rate").at("clamped").get<bool>() == false);
  CHECK(report.at("privacy").at("privacy_binds").get<bool>() == true);
  CHECK(report.at("privacy").at("variable_feasible").get<bool>() == false);

  const fs::path manifest = dir / "rates.json.manifest.json";
  REQUIRE(fs::exists(manifest));
  const json man = json::parse(read_file(manifest));
  CHECK(man.at("type") == "run_manifest");
  CHECK(man.at("command") == "rates");
  CHECK(man.at("wall_seconds").get<double>() >= 0.0);
}

TEST_CASE("tradeoff writes a well-formed curve and replays byte-identically") {
  const fs::path dir = unique_dir();
  const fs::path a = dir / "curve_a.csv";
  const fs::path b = dir / "curve_b.csv";
  const std::string common =
      "tradeoff " + kModelFlag + " --e0-min 0 --e0-max 0.3 --steps 4 --out ";
  const RunResult ra = run_cli(common + a.string(), dir);
  const RunResult rb = run_cli(common + b.string(), dir);
  CHECK(ra.exit_code == 0);
  CHECK(rb.exit_code == 0);

  const std::string text_a = read_file(a);
  CHECK(text_a == read_file(b));

  // RFC-4180 line endings throughout.
  CHECK(text_a.find("\r\n") != std::string::npos);
  const auto rows = parse_csv(text_a);
  REQUIRE(rows.size() == 5);  // header + 4 points
  REQUIRE(rows[0].size() == 6);
  CHECK(rows[0][0] == "e0");
  CHECK(rows[0][1] == "e_fr_fixed");

  double prev_e0 = -1.0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    REQUIRE(rows[i].size() == 6);
    const double e0 = std::stod(rows[i][0]);
    CHECK(e0 > prev_e0);
    prev_e0 = e0;
    const double fixed = std::stod(rows[i][1]);
    const double variable = std::stod(rows[i][2]);
    CHECK(fixed >= -1e-15);
    CHECK(variable >= fixed - 1e-9);  // variable regime always at least as good
    CHECK(std::stod(rows[i][3]) <= 1e-3);  // duality gaps within tolerance
    CHECK(std::stod(rows[i][4]) <= 1e-3);
  }
  CHECK(std::stod(rows[1][2]) > std::stod(rows[4][2]));  // decreasing in e0

  REQUIRE(fs::exists(dir / "curve_a.csv.manifest.json"));
  const json man = json::parse(read_file(dir / "curve_a.csv.manifest.json"));
  CHECK(man.at("command") == "tradeoff");
  CHECK(man.at("max_gap_fixed").get<double>() < 1e-3);
  CHECK(man.at("max_gap_variable").get<double>() < 1e-3);
}

TEST_CASE("tradeoff reports an unattainable duality tolerance via exit code 2") {
  const fs::path dir = unique_dir();
  const fs::path out = dir / "curve.csv";
  const RunResult r = run_cli("tradeoff " + kModelFlag +
                                  " --e0-min 0 --e0-max 0.1 --steps 3 "
                                  "--tol-duality 1e-15 --out " +
                                  out.string(),
                              dir);
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("disagree") != std::string::npos);
  // The data artifact is still written before the failure is raised.
  CHECK(fs::exists(out));
}

TEST_CASE("simulate produces a reproducible report in both regimes") {
  const fs::path dir = unique_dir();
  const fs::path a = dir / "sim_a.json";
  const fs::path b = dir / "sim_b.json";
  const std::string common = "simulate " + kModelFlag +
                             " --n 3 --rs 0.3 --rw 0.4 --metric gld:1.0 "
                             "--codes 20 --seed 5 --out ";
  const RunResult ra = run_cli(common + a.string(), dir);
  const RunResult rb = run_cli(common + b.string(), dir);
  CHECK(ra.exit_code == 0);
  CHECK(rb.exit_code == 0);
  CHECK(read_file(a) == read_file(b));

  const json rep = json::parse(read_file(a));
  CHECK(rep.at("type") == "sim_report");
  CHECK(rep.at("regime") == "fixed");
  CHECK(rep.at("num_codes").get<int>() == 20);
  const double p_fa = rep.at("p_fa").get<double>();
  const double p_fr = rep.at("p_fr").get<double>();
  CHECK(p_fa > 0.0);
  CHECK(p_fa <= 1.0);
  CHECK(p_fr >= 0.0);
  CHECK(p_fr <= 1.0);

  const fs::path v_out = dir / "sim_var.json";
  const RunResult rv = run_cli("simulate " + kModelFlag +
                                   " --n 3 --variable-e0 0.05 --metric varopt "
                                   "--codes 5 --seed 2 --out " +
                                   v_out.string(),
                               dir);
  CHECK(rv.exit_code == 0);
  const json vrep = json::parse(read_file(v_out));
  CHECK(vrep.at("regime") == "variable");
}

TEST_CASE("simulate rejects contradictory or missing rate flags") {
  const fs::path dir = unique_dir();
  const fs::path out = dir / "sim.json";
  const RunResult missing = run_cli(
      "simulate " + kModelFlag + " --n 3 --out " + out.string(), dir);
  CHECK(missing.exit_code == 1);

  const RunResult both = run_cli("simulate " + kModelFlag +
                                     " --n 3 --rs 0.3 --rw 0.4 "
                                     "--variable-e0 0.05 --out " +
                                     out.string(),
                                 dir);
  CHECK(both.exit_code == 1);
  CHECK(both.err.find("--variable-e0") != std::string::npos);
}

TEST_CASE("mismatched matches the true-posterior reference law") {
  const fs::path dir = unique_dir();
  const fs::path pp = dir / "pp_matched.json";
  // The model's true backward channel, written with full precision.
  write_file(pp, R"({"y_labels":["y0","y1"],"x_labels":["x0","x1"],
    "p_x_given_y":[[0.8421052631578947,0.15789473684210525],
                   [0.12903225806451613,0.870967741935484]]})");
  const fs::path out = dir / "mm.csv";
  const RunResult r = run_cli("mismatched " + kModelFlag + " --p-prime " +
                                  pp.string() +
                                  " --e0-min 0 --e0-max 0.2 --steps 3 --out " +
                                  out.string(),
                              dir);
  CHECK(r.exit_code == 0);

  const auto rows = parse_csv(read_file(out));
  REQUIRE(rows.size() == 4);
  CHECK(rows[0][0] == "e0");
  CHECK(rows[0][5] == "flags");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double matched_fixed = std::stod(rows[i][1]);
    const double mm_fixed = std::stod(rows[i][2]);
    const double matched_var = std::stod(rows[i][3]);
    const double mm_var = std::stod(rows[i][4]);
    // With the true posterior the fixed-rate bound is tight.
    CHECK(mm_fixed == doctest::Approx(matched_fixed).epsilon(1e-6));
    // The variable-rate bound never exceeds the matched curve.
    CHECK(mm_var <= matched_var + 1e-9);
    CHECK(rows[i][5].empty());
  }
}

TEST_CASE("mismatched flags reference laws that zero out source support") {
  const fs::path dir = unique_dir();
  const fs::path pp = dir / "pp_viol.json";
  write_file(pp, R"({"y_labels":["y0","y1"],"x_labels":["x0","x1"],
    "p_x_given_y":[[1.0,0.0],[0.0,1.0]]})");
  const fs::path out = dir / "mm.csv";
  const RunResult r = run_cli("mismatched " + kModelFlag + " --p-prime " +
                                  pp.string() +
                                  " --e0-min 0 --e0-max 0.1 --steps 2 --out " +
                                  out.string(),
                              dir);
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("zeros on the source support") != std::string::npos);
  const auto rows = parse_csv(read_file(out));
  REQUIRE(rows.size() == 3);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i][5] == "support-violation");
  }
}

TEST_CASE("invalid inputs exit with code 1") {
  const fs::path dir = unique_dir();
  const fs::path out = dir / "out.dat";

  const RunResult no_model = run_cli(
      "rates --model " + (dir / "missing.json").string() + " --e0 0.05", dir);
  CHECK(no_model.exit_code == 1);
  CHECK(no_model.err.find("error") != std::string::npos);

  const RunResult bad_metric =
      run_cli("simulate " + kModelFlag +
                  " --n 2 --rs 0.3 --rw 0.4 --metric bogus --out " +
                  out.string(),
              dir);
  CHECK(bad_metric.exit_code == 1);

  const RunResult zero_steps =
      run_cli("tradeoff " + kModelFlag +
                  " --e0-min 0 --e0-max 0.1 --steps 0 --out " + out.string(),
              dir);
  CHECK(zero_steps.exit_code == 1);

  const RunResult bad_sub = run_cli("frobnicate", dir);
  CHECK(bad_sub.exit_code == 1);

  const RunResult no_sub = run_cli("", dir);
  CHECK(no_sub.exit_code == 1);

  const RunResult negative_e0 =
      run_cli("rates " + kModelFlag + " --e0 -0.5", dir);
  CHECK(negative_e0.exit_code == 1);
}

TEST_CASE("bits flag changes console text but not data artifacts") {
  const fs::path dir = unique_dir();
  const fs::path a = dir / "plain.csv";
  const fs::path b = dir / "bits.csv";
  const std::string base =
      "tradeoff " + kModelFlag + " --e0-min 0 --e0-max 0.1 --steps 2 --out ";
  const RunResult ra = run_cli(base + a.string(), dir);
  const RunResult rb = run_cli(base + b.string() + " --bits", dir);
  CHECK(ra.exit_code == 0);
  CHECK(rb.exit_code == 0);
  CHECK(read_file(a) == read_file(b));
}

}  // TEST_SUITE("cli")
