#include "bioexp/rates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "bioexp/errors.hpp"
#include "bioexp/optim.hpp"
#include "simplex_solve.hpp"

namespace bioexp {

namespace {

// Indices and log-probabilities of supp(P_X); the optimization lives on the
// restricted simplex because mass outside the support costs infinite
// divergence.
struct Support {
  std::vector<std::size_t> idx;
  std::vector<double> log_p;
};

Support support_of(const Pmf& p) {
  Support s;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) {
      s.idx.push_back(i);
      s.log_p.push_back(std::log(p[i]));
    }
  }
  return s;
}

// sup_{lambda >= 0} -lambda ln sum_x P(x)^(1 + 1/lambda) - (1 + lambda) e0,
// evaluated through a stable log-sum-exp.
double dual_objective(const Support& s, double lambda, double e0) {
  if (lambda <= 0.0) {
    double lmax = *std::max_element(s.log_p.begin(), s.log_p.end());
    return -lmax - e0;
  }
  double c = 1.0 + 1.0 / lambda;
  double amax = -std::numeric_limits<double>::infinity();
  for (double lp : s.log_p) amax = std::max(amax, c * lp);
  double acc = 0.0;
  for (double lp : s.log_p) acc += std::exp(c * lp - amax);
  double lse = amax + std::log(acc);
  return -lambda * lse - (1.0 + lambda) * e0;
}

}  // namespace

HelperRateResult max_helper_rate_fixed(const SourceModel& model, double e0,
                                       const HelperRateOptions& opts) {
  if (!(e0 >= 0.0)) throw InputError("max_helper_rate_fixed: e0 must be >= 0");
  Support s = support_of(model.px());

  HelperRateResult out;
  if (e0 == 0.0) {
    // The feasible set collapses to {P_X}; the dual sup is approached only
    // as lambda grows without bound, so report the exact value directly.
    double h = 0.0;
    for (double lp : s.log_p) h -= std::exp(lp) * lp;
    out.raw = out.primal_value = out.dual_value = h;
    out.lambda = ExtReal::pos_inf();
    out.value = std::max(0.0, h);
    out.clamped = h < 0.0;
    out.gap = 0.0;
    return out;
  }

  // Dual: doubling bracket from lambda = 1 until three consecutive
  // decreases, then golden-section on [0, hi].
  double hi = 1.0;
  {
    double prev = dual_objective(s, hi, e0);
    int decreases = 0;
    while (decreases < 3 && hi < 0x1p40) {
      double next = dual_objective(s, hi * 2.0, e0);
      decreases = next < prev ? decreases + 1 : 0;
      prev = next;
      hi *= 2.0;
    }
  }
  ScalarOpt dual = golden_max(
      [&](double lam) { return dual_objective(s, lam, e0); }, 0.0, hi, 1e-10);

  // Primal: constrained minimization of E_Q[ln 1/P] - e0 on the support
  // simplex, grid seeded and locally refined.
  std::size_t cells = s.idx.size();
  detail::SimplexSolveOptions so;
  so.grid_resolution =
      opts.grid_resolution
          ? opts.grid_resolution
          : detail::auto_resolution(cells, 2000, 250000);
  so.refine = opts.refine;
  auto objective = [&](const std::vector<double>& q) {
    double v = 0.0;
    for (std::size_t i = 0; i < cells; ++i) v -= q[i] * s.log_p[i];
    return v - e0;
  };
  auto constraint = [&](const std::vector<double>& q) {
    double d = 0.0;
    for (std::size_t i = 0; i < cells; ++i)
      if (q[i] > 0.0) d += q[i] * (std::log(q[i]) - s.log_p[i]);
    return d - e0;
  };
  detail::SimplexMin primal =
      detail::minimize_on_simplex(cells, objective, constraint, so);

  out.primal_value = primal.value;
  out.dual_value = dual.f;
  out.lambda = ExtReal(dual.x);
  out.gap = std::abs(primal.value - dual.f);
  out.raw = dual.f;
  out.clamped = out.raw < 0.0;
  out.value = std::max(0.0, out.raw);
  if (out.gap > opts.duality_tol)
    throw DualityGapError("max_helper_rate_fixed: primal/dual disagreement",
                          out.gap, opts.duality_tol);
  return out;
}

double min_secret_rate_fixed(double e0) {
  if (!(e0 >= 0.0)) throw InputError("min_secret_rate_fixed: e0 must be >= 0");
  return e0;
}

double RateFunctionTable::max_identity_error() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!feasible(i)) continue;
    Pmf q = grid.point(i);
    worst = std::max(worst,
                     std::abs(r_s[i] + r_w[i].value() - entropy(q)));
  }
  return worst;
}

RateFunctionTable variable_rate_table(const SourceModel& model, double e0,
                                      SimplexGrid grid) {
  if (!(e0 >= 0.0)) throw InputError("variable_rate_table: e0 must be >= 0");
  if (!(grid.alphabet() == model.px().alphabet()))
    throw InputError("variable_rate_table: grid alphabet mismatch");
  RateFunctionTable t{std::move(grid), {}, {}, e0};
  t.r_s.reserve(t.grid.size());
  t.r_w.reserve(t.grid.size());
  for (std::size_t i = 0; i < t.grid.size(); ++i) {
    Pmf q = t.grid.point(i);
    ExtReal d = divergence(q, model.px());
    if (d.finite() && d.value() < e0) {
      t.r_s.push_back(e0 - d.value());
      t.r_w.push_back(expected_log_loss(q, model.px()) - ExtReal(e0));
    } else {
      t.r_s.push_back(0.0);
      t.r_w.push_back(ExtReal::pos_inf());
    }
  }
  return t;
}

PrivacyCapResult privacy_helper_cap(const SourceModel& model, PrivacyBudget budget) {
  if (!(budget.h0 >= 0.0)) throw InputError("privacy_helper_cap: h0 must be >= 0");
  Support s = support_of(model.px());
  auto objective = [&](double t) {
    double amax = -std::numeric_limits<double>::infinity();
    for (double lp : s.log_p) amax = std::max(amax, t * lp);
    double acc = 0.0;
    for (double lp : s.log_p) acc += std::exp(t * lp - amax);
    return amax + std::log(acc) + t * budget.h0;
  };
  ScalarOpt r = golden_min(objective, 0.0, 1.0, 1e-10);
  return PrivacyCapResult{r.f, r.x};
}

bool privacy_feasible_variable(const SourceModel& model, double e0,
                               PrivacyBudget budget) {
  if (!(e0 >= 0.0)) throw InputError("privacy_feasible_variable: e0 must be >= 0");
  if (!(budget.h0 >= 0.0))
    throw InputError("privacy_feasible_variable: h0 must be >= 0");
  return budget.h0 >= entropy(model.px()) - e0 - 1e-12;
}

CombinedCapResult combined_helper_cap(const SourceModel& model, double e0,
                                      PrivacyBudget budget,
                                      const HelperRateOptions& opts) {
  CombinedCapResult r;
  r.exponent_cap = max_helper_rate_fixed(model, e0, opts).value;
  r.privacy_cap = privacy_helper_cap(model, budget).value;
  r.privacy_binds = r.privacy_cap < r.exponent_cap;
  r.value = std::min(r.exponent_cap, r.privacy_cap);
  return r;
}

}  // namespace bioexp
