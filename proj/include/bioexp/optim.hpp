#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace bioexp {

struct ScalarOpt {
  double x = 0.0;
  double f = 0.0;
};

// Golden-section search for a unimodal minimum on [a,b]; stops when the
// bracket is narrower than x_tol. Endpoints are included as candidates.
ScalarOpt golden_min(const std::function<double(double)>& f, double a, double b,
                     double x_tol = 1e-10);
ScalarOpt golden_max(const std::function<double(double)>& f, double a, double b,
                     double x_tol = 1e-10);

struct NelderMeadOptions {
  int max_iter = 4000;
  double x_tol = 1e-11;
  double f_tol = 1e-13;
  double initial_step = 0.25;
};

struct NelderMeadResult {
  std::vector<double> x;
  double f = 0.0;
  bool converged = false;
  int evaluations = 0;
};

// Downhill simplex minimization; deterministic for a fixed start.
NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             const std::vector<double>& x0,
                             const NelderMeadOptions& opts = {});

// Numerically stable softmax; z may contain -inf entries (mapped to 0 mass).
std::vector<double> softmax(const std::vector<double>& z);
// Logit seed for refining a grid point: ln(max(p, floor)), shifted so the
// first coordinate is 0 (softmax is shift invariant).
std::vector<double> softmax_seed(const std::vector<double>& p, double floor = 1e-9);

// One draw from the flat Dirichlet (uniform over the simplex).
std::vector<double> dirichlet1(std::mt19937_64& rng, std::size_t k);

// Deterministic stream splitting for per-index seeds.
std::uint64_t split_seed(std::uint64_t master, std::uint64_t index);

}  // namespace bioexp
