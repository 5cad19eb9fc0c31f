#pragma once

#include <cstdint>
#include <functional>
#include <vector>

// Internal: composition-grid scan plus softmax Nelder-Mead refinement for
// minimizing functionals over a probability simplex.

namespace bioexp::detail {

using SimplexFn = std::function<double(const std::vector<double>&)>;

struct SimplexMin {
  std::vector<double> q;
  double value = 0.0;      // objective at q, penalty-free
  double violation = 0.0;  // max(0, constraint(q))
  unsigned grid_m = 0;
  bool converged = true;
};

struct SimplexSolveOptions {
  unsigned grid_resolution = 0;  // 0 = auto from preferred/max_points
  unsigned preferred_resolution = 60;
  std::uint64_t max_grid_points = 250000;
  int refine_starts = 5;
  bool refine = true;
  double feasibility_tol = 1e-9;
};

// Minimizes `objective` over the `cells`-simplex subject to constraint(q) <= 0
// (pass an empty function for unconstrained). The grid phase scans the
// composition lattice; the best points seed Nelder-Mead in softmax
// coordinates with a x10-ramped exact penalty on the constraint.
SimplexMin minimize_on_simplex(std::size_t cells, const SimplexFn& objective,
                               const SimplexFn& constraint,
                               const SimplexSolveOptions& opts = {});

// Largest resolution <= preferred whose grid stays under max_points.
unsigned auto_resolution(std::size_t cells, unsigned preferred,
                         std::uint64_t max_points);

}  // namespace bioexp::detail
