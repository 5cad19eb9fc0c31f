#pragma once

#include <optional>

#include "bioexp/extreal.hpp"
#include "bioexp/prob.hpp"

namespace bioexp {

struct FixedRates {
  double r_w = 0.0;  // helper-data rate, nats per symbol
  double r_s = 0.0;  // secret-key rate, nats per symbol
};

struct PrivacyBudget {
  double h0 = 0.0;  // allowed helper leakage about X, nats per symbol
};

struct HelperRateOptions {
  // 0 = auto: 2000 cells^-1 for binary, scaled down to keep the grid small
  // for larger alphabets.
  unsigned grid_resolution = 0;
  bool refine = true;
  double duality_tol = 1e-3;
};

// Largest helper rate compatible with FA exponent e0 under fixed-rate coding.
// Solved two independent ways (constrained grid minimization and the
// single-parameter dual); disagreement beyond duality_tol throws.
struct HelperRateResult {
  double value = 0.0;        // clamped at 0
  double raw = 0.0;          // unclamped optimum
  bool clamped = false;
  ExtReal lambda;            // dual witness; +inf marker at e0 == 0
  double primal_value = 0.0;
  double dual_value = 0.0;
  double gap = 0.0;          // |primal - dual|
};

HelperRateResult max_helper_rate_fixed(const SourceModel& model, double e0,
                                       const HelperRateOptions& opts = {});

// Smallest secret-key rate with FA exponent e0 under fixed-rate coding.
double min_secret_rate_fixed(double e0);

// Optimal per-type rate pair under variable-rate coding. Types with
// D(Q||P_X) >= e0 are infeasible: r_w = +inf marker, r_s = 0.
struct RateFunctionTable {
  SimplexGrid grid;
  std::vector<double> r_s;
  std::vector<ExtReal> r_w;
  double e0 = 0.0;

  bool feasible(std::size_t i) const { return r_w[i].finite(); }
  // Largest |r_s + r_w - H(Q)| over feasible points (identity check).
  double max_identity_error() const;
};

RateFunctionTable variable_rate_table(const SourceModel& model, double e0,
                                      SimplexGrid grid);

// Helper-rate cap enforcing leakage budget h0 under fixed-rate coding.
struct PrivacyCapResult {
  double value = 0.0;
  double s_witness = 0.0;
};

PrivacyCapResult privacy_helper_cap(const SourceModel& model, PrivacyBudget budget);

// Variable-rate coding meets leakage budget h0 iff h0 >= H(X) - e0.
bool privacy_feasible_variable(const SourceModel& model, double e0,
                               PrivacyBudget budget);

// Binding helper-rate cap when both the FA exponent and the leakage budget
// must hold under fixed-rate coding.
struct CombinedCapResult {
  double value = 0.0;
  double exponent_cap = 0.0;  // from max_helper_rate_fixed
  double privacy_cap = 0.0;   // from privacy_helper_cap
  bool privacy_binds = false;
};

CombinedCapResult combined_helper_cap(const SourceModel& model, double e0,
                                      PrivacyBudget budget,
                                      const HelperRateOptions& opts = {});

}  // namespace bioexp
