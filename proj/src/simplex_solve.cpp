#include "simplex_solve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bioexp/optim.hpp"
#include "bioexp/prob.hpp"

namespace bioexp::detail {

unsigned auto_resolution(std::size_t cells, unsigned preferred,
                         std::uint64_t max_points) {
  if (SimplexGrid::point_count(cells, preferred) <= max_points) return preferred;
  unsigned lo = 1, hi = preferred;
  while (lo < hi) {
    unsigned mid = lo + (hi - lo + 1) / 2;
    if (SimplexGrid::point_count(cells, mid) <= max_points)
      lo = mid;
    else
      hi = mid - 1;
  }
  return lo;
}

namespace {

struct Candidate {
  double score = std::numeric_limits<double>::infinity();
  std::vector<double> q;
};

}  // namespace

SimplexMin minimize_on_simplex(std::size_t cells, const SimplexFn& objective,
                               const SimplexFn& constraint,
                               const SimplexSolveOptions& opts) {
  unsigned m = opts.grid_resolution
                   ? opts.grid_resolution
                   : auto_resolution(cells, opts.preferred_resolution,
                                     opts.max_grid_points);

  // Grid phase: keep the best refine_starts points by soft-penalized score.
  // Strict comparison keeps the earliest (lowest lex index) point on ties.
  const double kSoftPenalty = 1e4;
  std::size_t keep = std::max(1, opts.refine_starts);
  std::vector<Candidate> best(keep);
  std::vector<double> q(cells);
  std::vector<unsigned> counts(cells, 0);

  auto visit = [&](auto&& self, std::size_t cell, unsigned left) -> void {
    if (cell + 1 == cells) {
      counts[cell] = left;
      for (std::size_t i = 0; i < cells; ++i) q[i] = double(counts[i]) / double(m);
      double score = objective(q);
      if (constraint) {
        double g = constraint(q);
        if (g > 0.0) score += kSoftPenalty * g;
      }
      if (score < best.back().score) {
        // Insert while keeping the list sorted by score.
        std::size_t pos = keep - 1;
        while (pos > 0 && score < best[pos - 1].score) {
          best[pos] = best[pos - 1];
          --pos;
        }
        best[pos] = Candidate{score, q};
      }
      return;
    }
    for (unsigned v = 0; v <= left; ++v) {
      counts[cell] = v;
      self(self, cell + 1, left - v);
    }
  };
  visit(visit, 0, m);

  auto finish = [&](const std::vector<double>& point) {
    SimplexMin r;
    r.q = point;
    r.value = objective(point);
    r.violation = constraint ? std::max(0.0, constraint(point)) : 0.0;
    r.grid_m = m;
    return r;
  };

  SimplexMin result = finish(best[0].q);
  if (!opts.refine || cells < 2) return result;

  // Feasible beats infeasible, then lower objective, then lower violation.
  auto better = [&](const SimplexMin& a, const SimplexMin& b) {
    bool fa = a.violation <= opts.feasibility_tol;
    bool fb = b.violation <= opts.feasibility_tol;
    if (fa != fb) return fa;
    if (fa) return a.value < b.value;
    return a.violation < b.violation ||
           (a.violation == b.violation && a.value < b.value);
  };

  for (const Candidate& c : best) {
    if (!std::isfinite(c.score)) continue;
    std::vector<double> z = softmax_seed(c.q, 0.5 / double(m));
    NelderMeadOptions nm;
    bool converged = true;
    if (constraint) {
      for (double weight = 1e2; weight <= 1e12; weight *= 10.0) {
        auto penalized = [&](const std::vector<double>& zz) {
          std::vector<double> p = softmax(zz);
          return objective(p) + weight * std::max(0.0, constraint(p));
        };
        NelderMeadResult nr = nelder_mead(penalized, z, nm);
        z = nr.x;
        converged = nr.converged;
        if (std::max(0.0, constraint(softmax(z))) <= opts.feasibility_tol) break;
      }
    } else {
      auto plain = [&](const std::vector<double>& zz) { return objective(softmax(zz)); };
      NelderMeadResult nr = nelder_mead(plain, z, nm);
      z = nr.x;
      converged = nr.converged;
    }
    SimplexMin cand = finish(softmax(z));
    cand.converged = converged;
    if (better(cand, result)) result = cand;
  }
  return result;
}

}  // namespace bioexp::detail
