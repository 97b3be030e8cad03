#pragma once

#include <stdexcept>
#include <string>

namespace benefitmark {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid input data, configuration, or arguments.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Design matrix is not of full column rank.
class RankDeficientError : public Error {
 public:
  using Error::Error;
};

/// Coefficients diverging with still-improving fit (complete separation).
class SeparationError : public Error {
 public:
  using Error::Error;
};

/// Iterative solver exhausted its iteration budget.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// A statistic is undefined on the given data (empty group, zero denominator).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

}  // namespace benefitmark
