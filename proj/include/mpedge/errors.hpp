#pragma once

#include <stdexcept>
#include <string>

namespace mpedge {

// Bad input: malformed population, out-of-range parameter, unknown distribution.
// The CLI maps this family to exit code 2.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numerical routine could not deliver its contract. Exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PoleProximity : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NoConvergence : public NumericalError {
 public:
  NoConvergence(const std::string& what, int iterations)
      : NumericalError(what + " (iterations: " + std::to_string(iterations) + ")"),
        iterations_(iterations) {}
  int iterations() const noexcept { return iterations_; }

 private:
  int iterations_;
};

class RootScanIncomplete : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class RegularityFailed : public NumericalError {
 public:
  RegularityFailed(const std::string& what, double margin)
      : NumericalError(what), margin_(margin) {}
  double margin() const noexcept { return margin_; }

 private:
  double margin_;
};

class GridTooCoarse : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class QuadratureFailure : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class Unsupported : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

}  // namespace mpedge
