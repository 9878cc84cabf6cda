#pragma once
// Error taxonomy shared by the library and the CLI. Each class maps to a
// fixed process exit code so scripted callers can branch on failure kind.

#include <stdexcept>
#include <string>

namespace homlat {

// Invalid user input: bad dimensions, malformed matrices, out-of-class
// coefficients, inconsistent grids. CLI exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Iterative solve failed to reach the requested tolerance. Carries the best
// residual achieved for diagnostics. CLI exit code 3.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double best_residual)
      : std::runtime_error(what), best_residual_(best_residual) {}
  double best_residual() const noexcept { return best_residual_; }

 private:
  double best_residual_;
};

// Request exceeds a hard size limit (site count, enumeration count).
// CLI exit code 4.
class CapacityError : public std::runtime_error {
 public:
  explicit CapacityError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace homlat
