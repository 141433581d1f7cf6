#pragma once

#include <stdexcept>
#include <string>

namespace olab {

/// Invalid or inconsistent input configuration (unknown law, bad step size, ...).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A mathematical precondition does not hold (zero-norm observable, index outside range).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Numerical failure: solver non-convergence, near-degenerate spectrum.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A requested enumeration exceeds its budget.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace olab
