#pragma once

#include <stdexcept>
#include <string>

namespace coherit {

class CoheritError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A design column with zero Euclidean norm (constant/degenerate covariate).
class ZeroColumnError : public CoheritError {
 public:
  explicit ZeroColumnError(int column)
      : CoheritError("design column " + std::to_string(column) + " has zero norm"),
        column_(column) {}
  int column() const { return column_; }

 private:
  int column_;
};

class InvalidRhoError : public CoheritError {
 public:
  explicit InvalidRhoError(double rho)
      : CoheritError("AR(1) parameter must satisfy |rho| < 1, got " + std::to_string(rho)) {}
};

// Coordinate descent exhausted its sweep budget without a KKT certificate.
class NoConvergenceError : public CoheritError {
 public:
  NoConvergenceError(double residual, double tol, int sweeps)
      : CoheritError("coordinate descent did not converge: KKT residual " +
                     std::to_string(residual) + " > tol " + std::to_string(tol) + " after " +
                     std::to_string(sweeps) + " sweeps"),
        residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

class InfeasibleSupportsError : public CoheritError {
 public:
  using CoheritError::CoheritError;
};

// Raised when more than the allowed fraction of replications fail.
class TooManyFailuresError : public CoheritError {
 public:
  using CoheritError::CoheritError;
};

}  // namespace coherit
