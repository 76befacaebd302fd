#pragma once

#include <stdexcept>
#include <string>

namespace phasefilter {

/// Base of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand dimensions do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// An argument lies outside the domain of the operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The request is well-formed but too large for the exact algorithm.
class ScaleError : public Error {
 public:
  using Error::Error;
};

/// Every filter component fell below the underflow floor.
class FilteredToZeroError : public Error {
 public:
  explicit FilteredToZeroError(double norm)
      : Error("filtered vector norm " + std::to_string(norm) + " below underflow floor"),
        norm_(norm) {}
  double norm() const noexcept { return norm_; }

 private:
  double norm_;
};

/// An iterative procedure ran out of attempts.
class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, double best_residual)
      : Error(what), best_residual_(best_residual) {}
  double best_residual() const noexcept { return best_residual_; }

 private:
  double best_residual_;
};

/// The Jacobi oracle failed to converge; signals corrupted input.
class OracleError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace phasefilter
