#pragma once

#include <stdexcept>
#include <string>

namespace l1min {

/// Bad input: negative thresholds, mismatched dimensions, missing ground truth.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Base for failures that arise inside a numerical kernel.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A Cholesky factorization or downdate lost positive definiteness.
class NotPositiveDefinite : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// NaN or Inf showed up in an iterative method.
class NumericalBreakdown : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// A linear system that should be solvable is numerically singular.
class IllConditioned : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Homotopy active set whose Gram matrix cannot be factored even after repair.
class DegenerateSupport : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace l1min
