#pragma once

#include "bioexp/extreal.hpp"
#include "bioexp/rates.hpp"
#include "bioexp/tradeoff.hpp"

namespace bioexp {

// Dual solvers: low-dimensional parameter maximizations whose values match
// the primal grid solvers (checked in tests and surfaced as duality gaps).

struct GallagerConfig {
  double rho_initial_cap = 8.0;  // unbounded-parameter search starts here
  double bracket_growth = 2.0;   // cap multiplier while the argmax hugs the top
  double rho_hard_cap = double(1u << 30);
  double inner_tol = 1e-10;      // golden-section interval width
  int w_starts = 8;              // uniform + Dirichlet(1) starts for |X| > 2
  HelperRateOptions helper_rate;
};

// Inner objective of the variable-rate dual at auxiliary distribution w:
//   -ln sum_y [ sum_x (P_XY(x,y) P_X(x)^(rho+lambda) w(x)^-rho)^(1/(1+lambda)) ]^(1+lambda)
// Returns the -inf marker when w has a zero on a needed support and rho > 0.
ExtReal dual_inner_objective(const SourceModel& model, const Pmf& w, double rho,
                             double lambda);

// True when P_X is uniform and the columns of P_{X|Y} are permutations of a
// common vector closed under composition; the W optimum is then uniform.
bool symmetric_uniform_source(const SourceModel& model);

TradeoffPoint fr_fixed_dual(const SourceModel& model, double e0,
                            const GallagerConfig& cfg = {});

// Fixed-rate FR exponent at an explicitly given helper rate (nats/symbol):
//   max over rho in [0,1] of -ln sum_y (sum_x P_XY^(1/(1+rho)))^(1+rho) + rho r_w.
// fr_fixed_dual is this function evaluated at r_w = max_helper_rate_fixed(e0).
TradeoffPoint fr_fixed_exponent_at_rate(const SourceModel& model, double r_w,
                                        const GallagerConfig& cfg = {});

TradeoffPoint fr_variable_dual(const SourceModel& model, double e0,
                               const GallagerConfig& cfg = {});

// Decoder scores sequences with the conditional law p_prime instead of the
// true P_{X|Y}. Fixed-rate curve over the (s, t <= s) box.
TradeoffPoint fr_fixed_mismatched(const SourceModel& model,
                                  const ConditionalPmf& p_prime, double e0,
                                  const GallagerConfig& cfg = {});

// Variable-rate mismatched curve over (s, t <= s, lambda >= 0, W).
TradeoffPoint fr_variable_mismatched(const SourceModel& model,
                                     const ConditionalPmf& p_prime, double e0,
                                     const GallagerConfig& cfg = {});

// Raw objective evaluations, exposed so tests can check lower-bound and
// reduction identities at arbitrary parameter choices.
double mismatched_objective_fixed(const SourceModel& model,
                                  const ConditionalPmf& p_prime, double rw,
                                  double s, double t);
double mismatched_objective_variable(const SourceModel& model,
                                     const ConditionalPmf& p_prime, double e0,
                                     double s, double t, double lambda,
                                     const Pmf& w);

}  // namespace bioexp
