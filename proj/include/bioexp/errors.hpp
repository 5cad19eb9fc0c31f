#pragma once

#include <stdexcept>
#include <string>

namespace bioexp {

// Bad user input (malformed model file, out-of-range argument). CLI exit 1.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Primal and dual solvers disagree beyond the configured tolerance. CLI exit 2.
class DualityGapError : public std::runtime_error {
 public:
  DualityGapError(const std::string& what, double gap, double tol)
      : std::runtime_error(what), gap(gap), tolerance(tol) {}
  double gap;
  double tolerance;
};

// An internal sanity check failed (non-monotone sweep, witness mismatch). CLI exit 2.
class NumericalConsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bioexp
