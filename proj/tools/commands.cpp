#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "bioexp/csiszar.hpp"
#include "bioexp/errors.hpp"
#include "bioexp/gallager.hpp"
#include "bioexp/model_io.hpp"
#include "bioexp/rates.hpp"
#include "bioexp/sim.hpp"

#ifndef BIOEXP_VERSION
#define BIOEXP_VERSION "0.0.0"
#endif

namespace bioexp::cli {

namespace {

constexpr double kLn2 = 0.6931471805599453;

struct Ticker {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  }
};

// Rates and exponents are stored in nats; --bits only affects printing.
std::string rate_str(double nats, bool bits) {
  std::string s = format_sig12(nats) + " nats";
  if (bits) s += " (" + format_sig12(nats / kLn2) + " bits)";
  return s;
}

std::string ext_str(const ExtReal& v, bool bits) {
  return v.finite() ? rate_str(v.value(), bits) : "inf";
}

std::string interval_str(const Interval& iv) {
  return "[" + format_sig12(iv.lo) + ", " + format_sig12(iv.hi) + "]";
}

void print_warnings(const std::vector<std::string>& ws) {
  for (const auto& w : ws) std::cerr << "warning: " << w << "\n";
}

std::vector<double> e0_grid(double lo, double hi, unsigned steps) {
  if (steps < 1) throw InputError("--steps must be >= 1");
  if (!(lo >= 0.0) || !(hi >= lo))
    throw InputError("need 0 <= --e0-min <= --e0-max");
  std::vector<double> g(steps);
  for (unsigned i = 0; i < steps; ++i)
    g[i] = steps == 1 ? lo
                      : lo + (hi - lo) * double(i) / double(steps - 1);
  return g;
}

TradeMode parse_mode(const std::string& s) {
  if (s == "fixed") return TradeMode::Fixed;
  if (s == "variable") return TradeMode::Variable;
  if (s == "both") return TradeMode::Both;
  throw InputError("unknown --mode '" + s + "' (expected fixed|variable|both)");
}

double parse_beta(const std::string& s, const char* what) {
  std::size_t pos = 0;
  double b = 0.0;
  try {
    b = std::stod(s, &pos);
  } catch (...) {
    pos = std::string::npos;
  }
  if (pos != s.size() || !std::isfinite(b))
    throw InputError(std::string("invalid beta in --metric ") + what);
  return b;
}

DecodingMetric parse_metric(const std::string& spec,
                            const std::optional<RateFunctionTable>& table) {
  if (spec == "map") return DecodingMetric::map();
  if (spec.rfind("gld:", 0) == 0)
    return DecodingMetric::likelihood(parse_beta(spec.substr(4), "gld:<beta>"));
  if (spec.rfind("minent:", 0) == 0)
    return DecodingMetric::min_entropy(
        parse_beta(spec.substr(7), "minent:<beta>"));
  if (spec.rfind("mismatched:", 0) == 0) {
    std::string path = spec.substr(11);
    if (path.empty())
      throw InputError("--metric mismatched:<path> needs a file path");
    LoadedConditional lc = load_conditional(path);
    print_warnings(lc.warnings);
    return DecodingMetric::mismatched(std::move(lc.cond));
  }
  if (spec == "varopt") {
    if (!table) throw InputError("--metric varopt requires --variable-e0");
    return DecodingMetric::variable_optimal(*table);
  }
  throw InputError("unknown --metric '" + spec +
                   "' (expected map|gld:<beta>|minent:<beta>|"
                   "mismatched:<path>|varopt)");
}

RunManifest base_manifest(const std::string& command,
                          const std::vector<std::string>& argv_echo,
                          const std::string& data_file, double tol) {
  RunManifest man;
  man.command = command;
  man.argv = argv_echo;
  man.data_file = data_file;
  man.version = BIOEXP_VERSION;
  man.tol_duality = tol;
  return man;
}

// ---------------------------------------------------------------------------

struct RatesArgs {
  std::string model_path, out;
  double e0 = 0.0, h0 = 0.0, tol = 1e-3;
  bool has_h0 = false, has_out = false, bits = false;
};

int cmd_rates(const RatesArgs& a, const std::vector<std::string>& argv_echo) {
  Ticker tick;
  if (!(a.e0 >= 0.0)) throw InputError("--e0 must be >= 0");
  if (a.has_h0 && !(a.h0 >= 0.0)) throw InputError("--h0 must be >= 0");
  LoadedModel lm = load_source_model(a.model_path);
  print_warnings(lm.warnings);

  HelperRateOptions hopt;
  hopt.duality_tol = a.tol;
  HelperRateResult rw = max_helper_rate_fixed(lm.model, a.e0, hopt);
  double rs = min_secret_rate_fixed(a.e0);

  std::cout << "model: " << a.model_path << "  |X|=" << lm.model.nx()
            << " |Y|=" << lm.model.ny() << "\n";
  std::cout << "target false-accept exponent e0: " << rate_str(a.e0, a.bits)
            << "\n";
  std::cout << "minimum secret-key rate: " << rate_str(rs, a.bits) << "\n";
  std::cout << "maximum helper rate: " << rate_str(rw.value, a.bits)
            << (rw.clamped ? "  [clamped at zero]" : "")
            << "  (duality gap " << format_sig12(rw.gap) << ")\n";

  nlohmann::ordered_json j;
  j["type"] = "rates_report";
  j["e0"] = a.e0;
  j["min_secret_rate"] = rs;
  j["max_helper_rate"] = {{"value", rw.value},
                          {"raw", rw.raw},
                          {"clamped", rw.clamped},
                          {"duality_gap", rw.gap}};
  j["max_helper_rate"]["lambda"] =
      rw.lambda.finite() ? nlohmann::ordered_json(rw.lambda.value())
                         : nlohmann::ordered_json(nullptr);

  if (a.has_h0) {
    PrivacyBudget budget{a.h0};
    PrivacyCapResult priv = privacy_helper_cap(lm.model, budget);
    CombinedCapResult comb = combined_helper_cap(lm.model, a.e0, budget, hopt);
    bool feasible = privacy_feasible_variable(lm.model, a.e0, budget);
    std::cout << "privacy helper cap (h0=" << format_sig12(a.h0)
              << "): " << rate_str(priv.value, a.bits) << "\n";
    std::cout << "combined helper cap: " << rate_str(comb.value, a.bits)
              << (comb.privacy_binds ? "  [privacy-binds]" : "") << "\n";
    std::cout << "variable-rate coding meets the leakage budget: "
              << (feasible ? "yes" : "no") << "\n";
    j["privacy"] = {{"h0", a.h0},
                    {"helper_cap", priv.value},
                    {"s_witness", priv.s_witness},
                    {"combined_cap", comb.value},
                    {"privacy_binds", comb.privacy_binds},
                    {"variable_feasible", feasible}};
  } else {
    j["privacy"] = nullptr;
  }

  if (a.has_out) {
    write_json_file(a.out, j);
    RunManifest man = base_manifest("rates", argv_echo, a.out, a.tol);
    man.max_gap_fixed = rw.gap;
    man.wall_seconds = tick.seconds();
    write_manifest(a.out, man);
    std::cout << "wrote report to " << a.out << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct TradeoffArgs {
  std::string model_path, out, mode = "both", solver = "both";
  double e0_min = 0.0, e0_max = 0.0, tol = 1e-3;
  unsigned steps = 0;
  bool bits = false;
};

int cmd_tradeoff(const TradeoffArgs& a,
                 const std::vector<std::string>& argv_echo) {
  Ticker tick;
  LoadedModel lm = load_source_model(a.model_path);
  print_warnings(lm.warnings);
  TradeMode mode = parse_mode(a.mode);
  bool want_primal = a.solver == "primal" || a.solver == "both";
  bool want_dual = a.solver == "dual" || a.solver == "both";
  if (!want_primal && !want_dual)
    throw InputError("unknown --solver '" + a.solver +
                     "' (expected primal|dual|both)");
  std::vector<double> grid = e0_grid(a.e0_min, a.e0_max, a.steps);
  bool do_fixed = mode != TradeMode::Variable;
  bool do_variable = mode != TradeMode::Fixed;

  PrimalOptions popt;
  popt.helper_rate.duality_tol = a.tol;
  GallagerConfig gcfg;
  gcfg.helper_rate.duality_tol = a.tol;

  std::vector<SweepRow> primal;
  if (want_primal)
    primal = sweep_primal(lm.model,
                          CurveSpec{a.e0_min, a.e0_max, a.steps, mode}, popt);

  std::vector<CsvRow> rows(grid.size());
  double max_gap_fixed = 0.0, max_gap_variable = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    rows[i].e0 = grid[i];
    std::optional<double> pf, pv, df, dv;
    if (want_primal) {
      if (primal[i].fixed) pf = primal[i].fixed->value;
      if (primal[i].variable) pv = primal[i].variable->value;
    }
    if (want_dual) {
      if (do_fixed) df = fr_fixed_dual(lm.model, grid[i], gcfg).value;
      if (do_variable) dv = fr_variable_dual(lm.model, grid[i], gcfg).value;
    }
    if (do_fixed) rows[i].e_fr_fixed = want_dual ? df : pf;
    if (do_variable) rows[i].e_fr_variable = want_dual ? dv : pv;
    if (want_primal && want_dual) {
      if (do_fixed) {
        rows[i].duality_gap_fixed = std::abs(*pf - *df);
        max_gap_fixed = std::max(max_gap_fixed, *rows[i].duality_gap_fixed);
      }
      if (do_variable) {
        rows[i].duality_gap_variable = std::abs(*pv - *dv);
        max_gap_variable =
            std::max(max_gap_variable, *rows[i].duality_gap_variable);
      }
    }
    if (do_fixed &&
        max_helper_rate_fixed(lm.model, grid[i], popt.helper_rate).clamped)
      rows[i].flags.push_back("rw-clamped");
  }

  write_tradeoff_csv(a.out, rows);
  RunManifest man = base_manifest("tradeoff", argv_echo, a.out, a.tol);
  if (want_primal && want_dual) {
    if (do_fixed) man.max_gap_fixed = max_gap_fixed;
    if (do_variable) man.max_gap_variable = max_gap_variable;
  }
  man.wall_seconds = tick.seconds();
  write_manifest(a.out, man);

  std::cout << "wrote " << rows.size() << " rows to " << a.out << "\n";
  if (want_primal && want_dual) {
    if (do_fixed)
      std::cout << "max duality gap (fixed): " << rate_str(max_gap_fixed, a.bits)
                << "\n";
    if (do_variable)
      std::cout << "max duality gap (variable): "
                << rate_str(max_gap_variable, a.bits) << "\n";
    double worst = std::max(do_fixed ? max_gap_fixed : 0.0,
                            do_variable ? max_gap_variable : 0.0);
    if (worst > a.tol)
      throw DualityGapError("primal and dual curve values disagree", worst,
                            a.tol);
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string model_path, out, metric = "map";
  unsigned n = 0, codes = 100;
  double rs = 0.0, rw = 0.0, variable_e0 = 0.0;
  std::uint64_t seed = 1;
  bool has_rs = false, has_rw = false, has_variable = false, bits = false;
};

int cmd_simulate(const SimulateArgs& a,
                 const std::vector<std::string>& argv_echo) {
  Ticker tick;
  if (a.has_variable && (a.has_rs || a.has_rw))
    throw InputError("--variable-e0 replaces --rs/--rw");
  if (!a.has_variable && !(a.has_rs && a.has_rw))
    throw InputError(
        "give either --rs and --rw (fixed-rate code) or --variable-e0 "
        "(variable-rate code)");
  LoadedModel lm = load_source_model(a.model_path);
  print_warnings(lm.warnings);

  std::optional<RateFunctionTable> table;
  if (a.has_variable) {
    if (!(a.variable_e0 >= 0.0))
      throw InputError("--variable-e0 must be >= 0");
    table = variable_rate_table(lm.model, a.variable_e0,
                                SimplexGrid(lm.model.px().alphabet(), a.n));
  }
  DecodingMetric metric = parse_metric(a.metric, table);

  SimReport rep =
      a.has_variable
          ? ensemble_estimate(lm.model, a.n, *table, metric, a.codes, a.seed)
          : ensemble_estimate(lm.model, a.n, FixedRates{a.rw, a.rs}, metric,
                              a.codes, a.seed);

  write_json_file(a.out, sim_report_json(rep));
  RunManifest man = base_manifest("simulate", argv_echo, a.out, 0.0);
  man.seeds = {a.seed};
  man.wall_seconds = tick.seconds();
  write_manifest(a.out, man);

  std::cout << "regime: " << (a.has_variable ? "variable" : "fixed")
            << "  n=" << rep.n << "  codes=" << rep.num_codes
            << "  metric=" << rep.metric_tag << "  seed=" << rep.seed << "\n";
  std::cout << "p_fa: " << format_sig12(rep.p_fa) << " ci95 "
            << interval_str(rep.fa_ci)
            << "  empirical exponent: " << ext_str(rep.fa_exponent, a.bits)
            << "\n";
  std::cout << "p_fr: " << format_sig12(rep.p_fr) << " ci95 "
            << interval_str(rep.fr_ci)
            << "  empirical exponent: " << ext_str(rep.fr_exponent, a.bits)
            << "\n";
  if (a.has_variable) {
    double efr = fr_variable_dual(lm.model, a.variable_e0).value;
    std::cout << "analytic references: false-accept design exponent "
              << rate_str(a.variable_e0, a.bits) << ", false-reject exponent "
              << rate_str(efr, a.bits) << "\n";
  } else {
    double efa = fa_exponent(lm.model, FixedRates{a.rw, a.rs}).value;
    double efr = fr_fixed_exponent_at_rate(lm.model, a.rw).value;
    std::cout << "analytic references: false-accept exponent "
              << rate_str(efa, a.bits) << ", false-reject exponent "
              << rate_str(efr, a.bits) << "\n";
  }
  std::cout << "wrote report to " << a.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct MismatchedArgs {
  std::string model_path, pp_path, out, mode = "both";
  double e0_min = 0.0, e0_max = 0.0;
  unsigned steps = 0;
  bool bits = false;
};

int cmd_mismatched(const MismatchedArgs& a,
                   const std::vector<std::string>& argv_echo) {
  Ticker tick;
  LoadedModel lm = load_source_model(a.model_path);
  print_warnings(lm.warnings);
  LoadedConditional pc = load_conditional(a.pp_path);
  print_warnings(pc.warnings);
  if (!(pc.cond.given_alphabet() == lm.model.joint().y_alphabet()) ||
      !(pc.cond.out_alphabet() == lm.model.joint().x_alphabet()))
    throw InputError(
        "reference law must condition on the model's Y alphabet and emit its "
        "X alphabet");
  TradeMode mode = parse_mode(a.mode);
  std::vector<double> grid = e0_grid(a.e0_min, a.e0_max, a.steps);
  bool do_fixed = mode != TradeMode::Variable;
  bool do_variable = mode != TradeMode::Fixed;

  bool support_violation = false;
  for (std::size_t y = 0; y < lm.model.ny(); ++y)
    for (std::size_t x = 0; x < lm.model.nx(); ++x)
      if (lm.model.joint().at(x, y) > 0.0 && pc.cond.row(y)[x] == 0.0)
        support_violation = true;

  std::ostringstream os;
  os << "e0,matched_fixed,mismatched_fixed,matched_variable,"
        "mismatched_variable,flags\r\n";
  auto field = [](std::optional<double> v) -> std::string {
    if (!v) return "";
    if (!std::isfinite(*v))
      throw NumericalConsistencyError("refusing to write a non-finite CSV value");
    return format_sig12(*v);
  };
  double worst_excess = 0.0;
  double prev = -std::numeric_limits<double>::infinity();
  for (double e0 : grid) {
    if (!(e0 > prev))
      throw NumericalConsistencyError("CSV rows must be strictly increasing in e0");
    prev = e0;
    std::optional<double> mf, mmf, mv, mmv;
    if (do_fixed) {
      mf = fr_fixed_dual(lm.model, e0).value;
      mmf = fr_fixed_mismatched(lm.model, pc.cond, e0).value;
      worst_excess = std::max(worst_excess, *mmf - *mf);
    }
    if (do_variable) {
      mv = fr_variable_dual(lm.model, e0).value;
      mmv = fr_variable_mismatched(lm.model, pc.cond, e0).value;
      worst_excess = std::max(worst_excess, *mmv - *mv);
    }
    os << format_sig12(e0) << ',' << field(mf) << ',' << field(mmf) << ','
       << field(mv) << ',' << field(mmv) << ','
       << (support_violation ? "support-violation" : "") << "\r\n";
  }
  {
    std::ofstream out(a.out, std::ios::binary);
    if (!out) throw InputError("cannot write file: " + a.out);
    out << os.str();
  }
  RunManifest man = base_manifest("mismatched", argv_echo, a.out, 0.0);
  man.wall_seconds = tick.seconds();
  write_manifest(a.out, man);

  std::cout << "wrote " << grid.size() << " rows to " << a.out << "\n";
  if (support_violation)
    std::cout << "note: reference law has zeros on the source support; the "
                 "bound degrades to its zero-tilt form\n";
  std::cout << "max mismatched-over-matched excess: "
            << rate_str(worst_excess, a.bits) << "\n";
  if (worst_excess > 1e-6)
    throw NumericalConsistencyError(
        "mismatched curve exceeded the matched curve by " +
        format_sig12(worst_excess) + " nats");
  return 0;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{
      "Error-exponent trade-off curves and exact binning simulation for "
      "secret-key authentication sources. Rates and exponents are in nats; "
      "--bits adds a bits rendering to printed values only."};
  app.require_subcommand(1);

  RatesArgs ra;
  CLI::App* rates = app.add_subcommand(
      "rates", "Achievable-rate summary at a false-accept exponent target");
  rates->add_option("--model", ra.model_path, "source model JSON file")
      ->required();
  rates->add_option("--e0", ra.e0, "false-accept exponent target, nats")
      ->required();
  rates->add_option("--h0", ra.h0, "helper leakage budget, nats");
  rates->add_option("--out", ra.out, "write a JSON report here");
  rates->add_option("--tol-duality", ra.tol,
                    "allowed primal/dual disagreement (default 1e-3)");
  rates->add_flag("--bits", ra.bits, "also print values in bits");

  TradeoffArgs ta;
  CLI::App* tradeoff = app.add_subcommand(
      "tradeoff", "False-reject exponent curve(s) over a false-accept grid");
  tradeoff->add_option("--model", ta.model_path, "source model JSON file")
      ->required();
  tradeoff->add_option("--e0-min", ta.e0_min, "grid start (nats)")->required();
  tradeoff->add_option("--e0-max", ta.e0_max, "grid end (nats)")->required();
  tradeoff->add_option("--steps", ta.steps, "grid points, endpoints included")
      ->required();
  tradeoff->add_option("--mode", ta.mode, "fixed|variable|both (default both)");
  tradeoff->add_option("--solver", ta.solver,
                       "primal|dual|both (default both; both checks gaps)");
  tradeoff->add_option("--tol-duality", ta.tol,
                       "allowed primal/dual disagreement (default 1e-3)");
  tradeoff->add_option("--out", ta.out, "output CSV path")->required();
  tradeoff->add_flag("--bits", ta.bits, "also print values in bits");

  SimulateArgs sa;
  CLI::App* simulate = app.add_subcommand(
      "simulate", "Exact small-blocklength ensemble simulation");
  simulate->add_option("--model", sa.model_path, "source model JSON file")
      ->required();
  simulate->add_option("--n", sa.n, "blocklength")->required();
  simulate->add_option("--rs", sa.rs, "secret-key rate, nats/symbol");
  simulate->add_option("--rw", sa.rw, "helper rate, nats/symbol");
  simulate->add_option("--variable-e0", sa.variable_e0,
                       "use the optimal variable-rate code for this budget");
  simulate->add_option(
      "--metric", sa.metric,
      "map|gld:<beta>|minent:<beta>|mismatched:<path>|varopt (default map)");
  simulate->add_option("--codes", sa.codes,
                       "independent code draws (default 100)");
  simulate->add_option("--seed", sa.seed, "ensemble seed (default 1)");
  simulate->add_option("--out", sa.out, "output report JSON path")->required();
  simulate->add_flag("--bits", sa.bits, "also print values in bits");

  MismatchedArgs ma;
  CLI::App* mismatched = app.add_subcommand(
      "mismatched",
      "Matched vs mismatched-decoder false-reject exponent curves");
  mismatched->add_option("--model", ma.model_path, "source model JSON file")
      ->required();
  mismatched
      ->add_option("--p-prime", ma.pp_path,
                   "decoder reference law JSON (conditional on Y)")
      ->required();
  mismatched->add_option("--e0-min", ma.e0_min, "grid start (nats)")
      ->required();
  mismatched->add_option("--e0-max", ma.e0_max, "grid end (nats)")->required();
  mismatched->add_option("--steps", ma.steps, "grid points, endpoints included")
      ->required();
  mismatched->add_option("--mode", ma.mode,
                         "fixed|variable|both (default both)");
  mismatched->add_option("--out", ma.out, "output CSV path")->required();
  mismatched->add_flag("--bits", ma.bits, "also print values in bits");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  ra.has_h0 = rates->count("--h0") > 0;
  ra.has_out = rates->count("--out") > 0;
  sa.has_rs = simulate->count("--rs") > 0;
  sa.has_rw = simulate->count("--rw") > 0;
  sa.has_variable = simulate->count("--variable-e0") > 0;

  std::vector<std::string> argv_echo(argv, argv + argc);
  try {
    if (rates->parsed()) return cmd_rates(ra, argv_echo);
    if (tradeoff->parsed()) return cmd_tradeoff(ta, argv_echo);
    if (simulate->parsed()) return cmd_simulate(sa, argv_echo);
    if (mismatched->parsed()) return cmd_mismatched(ma, argv_echo);
  } catch (const DualityGapError& e) {
    std::cerr << "error: " << e.what() << " (gap " << format_sig12(e.gap)
              << " > tolerance " << format_sig12(e.tolerance) << ")\n";
    return 2;
  } catch (const NumericalConsistencyError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace bioexp::cli
