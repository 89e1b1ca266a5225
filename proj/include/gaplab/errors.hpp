#pragma once

#include <stdexcept>
#include <string>

namespace gaplab {

/// Thrown when a parameter lies outside the admissible domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Thrown when an iterative method (ODE integrator, linear solver) fails to converge.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gaplab
