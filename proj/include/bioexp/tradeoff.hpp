#pragma once

#include <optional>
#include <string>

#include "bioexp/prob.hpp"

namespace bioexp {

enum class TradeMode { Fixed, Variable, Both };

struct CurveSpec {
  double e0_min = 0.0;
  double e0_max = 0.0;
  unsigned steps = 1;  // number of sample points, endpoints included
  TradeMode mode = TradeMode::Both;
};

// Maximizer location for the low-dimensional dual solvers.
struct DualWitness {
  double lambda = 0.0;
  double rho = 0.0;
  double s = 0.0;
  double t = 0.0;
  std::optional<Pmf> w;
  bool lambda_unbounded = false;  // e0 == 0: value is a limit, not attained
};

struct TradeoffPoint {
  double e0 = 0.0;
  double value = 0.0;
  std::string solver_tag;
  // Conservative a posteriori bound for the grid-seeded primal solvers
  // (objective Lipschitz constant times grid mesh); 0 for dual solvers.
  double error_bound = 0.0;
  bool converged = true;
  std::optional<JointPmf> q_witness;
  std::optional<DualWitness> dual_witness;
};

}  // namespace bioexp
