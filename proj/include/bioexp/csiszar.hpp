#pragma once

#include <vector>

#include "bioexp/rates.hpp"
#include "bioexp/tradeoff.hpp"

namespace bioexp {

// Primal solvers: constrained minimizations of divergence functionals over
// composition grids with local refinement.

struct PrimalOptions {
  unsigned grid_resolution = 0;  // 0 = auto (target <= max_grid_points)
  unsigned preferred_resolution = 60;
  std::uint64_t max_grid_points = 250000;
  int refine_starts = 5;
  bool refine = true;
  HelperRateOptions helper_rate;
};

// min over Q_X of D(Q||P_X) + min{r_s, [H(Q) - r_w]+}: the exponent of the
// false-accept probability at fixed rates.
struct FaExponentResult {
  double value = 0.0;
  Pmf q_witness;
  double error_bound = 0.0;
};

FaExponentResult fa_exponent(const SourceModel& model, FixedRates rates,
                             const PrimalOptions& opts = {});

// min over Q_XY of D(Q||P_XY) + [R_w(e0) - H_Q(X|Y)]+ (fixed-rate FR curve).
TradeoffPoint fr_fixed_primal(const SourceModel& model, double e0,
                              const PrimalOptions& opts = {});

// min over {Q_XY : D(Q_X||P_X) <= e0} of
//   D(Q||P_XY) + [E_Q ln 1/P_X - e0 - H_Q(X|Y)]+ (variable-rate FR curve).
// e0 == 0 restricts exactly to Q_X = P_X.
TradeoffPoint fr_variable_primal(const SourceModel& model, double e0,
                                 const PrimalOptions& opts = {});

// Evaluates the requested curve(s) on an evenly spaced e0 grid and checks
// monotonicity (non-increasing within 1e-6) post hoc.
struct SweepRow {
  double e0 = 0.0;
  std::optional<TradeoffPoint> fixed;
  std::optional<TradeoffPoint> variable;
};

std::vector<SweepRow> sweep_primal(const SourceModel& model, const CurveSpec& spec,
                                   const PrimalOptions& opts = {});

}  // namespace bioexp
