// Python bindings: a thin, copy-oriented layer over the core solvers and the
// exact simulator. Results cross the boundary as plain dicts/lists so the
// python side carries no binary-layout assumptions.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "bioexp/csiszar.hpp"
#include "bioexp/errors.hpp"
#include "bioexp/gallager.hpp"
#include "bioexp/model_io.hpp"
#include "bioexp/prob.hpp"
#include "bioexp/rates.hpp"
#include "bioexp/sim.hpp"

namespace py = pybind11;
using namespace bioexp;

namespace {

SourceModel model_from_rows(const std::vector<std::vector<double>>& joint_rows) {
  if (joint_rows.empty()) throw InputError("joint_rows must be non-empty");
  return SourceModel(JointPmf(Alphabet::indexed("x", joint_rows.size()),
                              Alphabet::indexed("y", joint_rows[0].size()),
                              joint_rows));
}

ConditionalPmf conditional_from_rows(const SourceModel& model,
                                     const std::vector<std::vector<double>>& rows) {
  if (rows.size() != model.ny())
    throw InputError("reference law needs one row per y symbol");
  std::vector<Pmf> pmfs;
  for (const auto& r : rows) pmfs.emplace_back(model.joint().x_alphabet(), r);
  return ConditionalPmf(model.joint().y_alphabet(), model.joint().x_alphabet(),
                        std::move(pmfs));
}

py::object ext_or_none(const ExtReal& v) {
  if (v.finite()) return py::float_(v.value());
  return py::none();
}

py::dict point_dict(const TradeoffPoint& p) {
  py::dict d;
  d["e0"] = p.e0;
  d["value"] = p.value;
  d["solver"] = p.solver_tag;
  d["error_bound"] = p.error_bound;
  d["converged"] = p.converged;
  if (p.dual_witness) {
    py::dict w;
    w["lambda"] = p.dual_witness->lambda;
    w["rho"] = p.dual_witness->rho;
    w["s"] = p.dual_witness->s;
    w["t"] = p.dual_witness->t;
    w["lambda_unbounded"] = p.dual_witness->lambda_unbounded;
    if (p.dual_witness->w) w["w"] = p.dual_witness->w->probs();
    d["witness"] = w;
  }
  return d;
}

py::dict interval_dict(const Interval& iv) {
  py::dict d;
  d["lo"] = iv.lo;
  d["hi"] = iv.hi;
  return d;
}

py::dict report_dict(const SimReport& r) {
  py::dict d;
  d["n"] = r.n;
  d["num_codes"] = r.num_codes;
  d["exact"] = r.exact;
  d["regime"] = r.regime == Regime::Fixed ? "fixed" : "variable";
  d["seed"] = r.seed;
  d["metric"] = r.metric_tag;
  d["p_fr"] = r.p_fr;
  d["p_fr_ci95"] = interval_dict(r.fr_ci);
  d["p_fa"] = r.p_fa;
  d["p_fa_ci95"] = interval_dict(r.fa_ci);
  d["fr_exponent"] = ext_or_none(r.fr_exponent);
  d["fa_exponent"] = ext_or_none(r.fa_exponent);
  d["per_code_fr"] = r.per_code_fr;
  d["per_code_fa"] = r.per_code_fa;
  return d;
}

DecodingMetric make_metric(const SourceModel& model, const std::string& name,
                           double beta,
                           const std::optional<std::vector<std::vector<double>>>& p_prime) {
  if (name == "map") return DecodingMetric::map();
  if (name == "gld" || name == "likelihood") return DecodingMetric::likelihood(beta);
  if (name == "minent") return DecodingMetric::min_entropy(beta);
  if (name == "mismatched") {
    if (!p_prime) throw InputError("metric 'mismatched' needs p_prime rows");
    return DecodingMetric::mismatched(conditional_from_rows(model, *p_prime), beta);
  }
  throw InputError("unknown metric: " + name);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() =
      "Exact solvers and simulators for the false-accept / false-reject "
      "error-exponent trade-off in secret-key authentication from noisy "
      "enrollment data.";

  py::class_<SourceModel>(m, "SourceModel")
      .def(py::init(&model_from_rows), py::arg("joint_rows"),
           "Build a memoryless source from the joint matrix P[x][y].")
      .def_property_readonly("nx", &SourceModel::nx)
      .def_property_readonly("ny", &SourceModel::ny)
      .def_property_readonly("joint",
                             [](const SourceModel& s) {
                               std::vector<std::vector<double>> rows(s.nx());
                               for (std::size_t x = 0; x < s.nx(); ++x)
                                 for (std::size_t y = 0; y < s.ny(); ++y)
                                   rows[x].push_back(s.joint().at(x, y));
                               return rows;
                             })
      .def_property_readonly("px", [](const SourceModel& s) { return s.px().probs(); })
      .def_property_readonly("py", [](const SourceModel& s) { return s.py().probs(); })
      .def_property_readonly(
          "x_given_y",
          [](const SourceModel& s) {
            std::vector<std::vector<double>> rows;
            for (std::size_t y = 0; y < s.ny(); ++y)
              rows.push_back(s.x_given_y().row(y).probs());
            return rows;
          },
          "Backward channel rows, one per y symbol.")
      .def("entropy_x", [](const SourceModel& s) { return entropy(s.px()); })
      .def("conditional_entropy",
           [](const SourceModel& s) { return conditional_entropy(s.joint()); })
      .def("__repr__", [](const SourceModel& s) {
        return "<SourceModel |X|=" + std::to_string(s.nx()) +
               " |Y|=" + std::to_string(s.ny()) + ">";
      });

  m.def(
      "load_model",
      [](const std::string& path) {
        LoadedModel lm = load_source_model(path);
        return py::make_tuple(lm.model, lm.warnings);
      },
      py::arg("path"),
      "Load a source model from JSON; returns (model, warnings).");

  // Rate formulas.
  m.def("min_secret_rate", &min_secret_rate_fixed, py::arg("e0"));
  m.def(
      "max_helper_rate",
      [](const SourceModel& model, double e0, double tol) {
        HelperRateOptions opts;
        opts.duality_tol = tol;
        const HelperRateResult r = max_helper_rate_fixed(model, e0, opts);
        py::dict d;
        d["value"] = r.value;
        d["raw"] = r.raw;
        d["clamped"] = r.clamped;
        d["lambda"] = ext_or_none(r.lambda);
        d["gap"] = r.gap;
        return d;
      },
      py::arg("model"), py::arg("e0"), py::arg("tol") = 1e-3);
  m.def(
      "privacy_helper_cap",
      [](const SourceModel& model, double h0) {
        const PrivacyCapResult r = privacy_helper_cap(model, PrivacyBudget{h0});
        py::dict d;
        d["value"] = r.value;
        d["s_witness"] = r.s_witness;
        return d;
      },
      py::arg("model"), py::arg("h0"));
  m.def(
      "privacy_feasible_variable",
      [](const SourceModel& model, double e0, double h0) {
        return privacy_feasible_variable(model, e0, PrivacyBudget{h0});
      },
      py::arg("model"), py::arg("e0"), py::arg("h0"));
  m.def(
      "combined_helper_cap",
      [](const SourceModel& model, double e0, double h0) {
        const CombinedCapResult r =
            combined_helper_cap(model, e0, PrivacyBudget{h0});
        py::dict d;
        d["value"] = r.value;
        d["exponent_cap"] = r.exponent_cap;
        d["privacy_cap"] = r.privacy_cap;
        d["privacy_binds"] = r.privacy_binds;
        return d;
      },
      py::arg("model"), py::arg("e0"), py::arg("h0"));

  // Trade-off curves.
  m.def(
      "fa_exponent",
      [](const SourceModel& model, double rw, double rs) {
        return fa_exponent(model, FixedRates{rw, rs}).value;
      },
      py::arg("model"), py::arg("rw"), py::arg("rs"));
  m.def(
      "fr_fixed",
      [](const SourceModel& model, double e0, const std::string& solver) {
        if (solver == "primal") return point_dict(fr_fixed_primal(model, e0));
        if (solver == "dual") return point_dict(fr_fixed_dual(model, e0));
        throw InputError("solver must be 'primal' or 'dual'");
      },
      py::arg("model"), py::arg("e0"), py::arg("solver") = "dual");
  m.def(
      "fr_variable",
      [](const SourceModel& model, double e0, const std::string& solver) {
        if (solver == "primal") return point_dict(fr_variable_primal(model, e0));
        if (solver == "dual") return point_dict(fr_variable_dual(model, e0));
        throw InputError("solver must be 'primal' or 'dual'");
      },
      py::arg("model"), py::arg("e0"), py::arg("solver") = "dual");
  m.def(
      "fr_fixed_at_rate",
      [](const SourceModel& model, double rw) {
        return fr_fixed_exponent_at_rate(model, rw).value;
      },
      py::arg("model"), py::arg("rw"),
      "Fixed-rate reject exponent at an explicit helper rate.");
  m.def(
      "fr_fixed_mismatched",
      [](const SourceModel& model, const std::vector<std::vector<double>>& p_prime,
         double e0) {
        return point_dict(
            fr_fixed_mismatched(model, conditional_from_rows(model, p_prime), e0));
      },
      py::arg("model"), py::arg("p_prime"), py::arg("e0"));
  m.def(
      "fr_variable_mismatched",
      [](const SourceModel& model, const std::vector<std::vector<double>>& p_prime,
         double e0) {
        return point_dict(fr_variable_mismatched(
            model, conditional_from_rows(model, p_prime), e0));
      },
      py::arg("model"), py::arg("p_prime"), py::arg("e0"));
  m.def(
      "sweep",
      [](const SourceModel& model, double e0_min, double e0_max, unsigned steps) {
        const auto rows =
            sweep_primal(model, CurveSpec{e0_min, e0_max, steps, TradeMode::Both});
        py::list out;
        for (const auto& r : rows) {
          py::dict d;
          d["e0"] = r.e0;
          d["fixed"] = r.fixed->value;
          d["variable"] = r.variable->value;
          out.append(d);
        }
        return out;
      },
      py::arg("model"), py::arg("e0_min"), py::arg("e0_max"), py::arg("steps"),
      "Primal sweep of both curve families on an even e0 grid.");

  // Exact ensemble simulation.
  m.def(
      "simulate_fixed",
      [](const SourceModel& model, unsigned n, double rw, double rs,
         const std::string& metric, double beta,
         const std::optional<std::vector<std::vector<double>>>& p_prime,
         unsigned codes, std::uint64_t seed) {
        const DecodingMetric dm = make_metric(model, metric, beta, p_prime);
        return report_dict(
            ensemble_estimate(model, n, FixedRates{rw, rs}, dm, codes, seed));
      },
      py::arg("model"), py::arg("n"), py::arg("rw"), py::arg("rs"),
      py::arg("metric") = "map", py::arg("beta") = 1.0,
      py::arg("p_prime") = py::none(), py::arg("codes") = 32,
      py::arg("seed") = 1);
  m.def(
      "simulate_variable",
      [](const SourceModel& model, unsigned n, double e0, unsigned codes,
         std::uint64_t seed) {
        const RateFunctionTable table = variable_rate_table(
            model, e0, SimplexGrid(model.px().alphabet(), n));
        return report_dict(ensemble_estimate(
            model, n, table, DecodingMetric::variable_optimal(table), codes, seed));
      },
      py::arg("model"), py::arg("n"), py::arg("e0"), py::arg("codes") = 32,
      py::arg("seed") = 1,
      "Variable-rate ensemble with the per-type optimal rate table and its "
      "matching decoder metric.");

  m.attr("__version__") = BIOEXP_VERSION;
}
