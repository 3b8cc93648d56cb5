#pragma once

#include <stdexcept>
#include <string>

namespace adaflow {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of a function (t <= 0, v < -eps, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Invalid user-supplied configuration: bad schedule/stepsize parameters,
/// violated step guards, unknown config keys.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure: blow-up, singular systems, non-Hurwitz matrices,
/// degenerate denominators.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class UnsupportedNoiseError : public Error {
 public:
  using Error::Error;
};

class AsymmetryError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NonHurwitzError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SingularSystemError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DegenerateDenominatorError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Step-size bound of the CLT (alpha = 1 case) violated.
class StepsizeConstraintError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class MissingHessianError : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

}  // namespace adaflow
