#pragma once

#include <stdexcept>
#include <string>

namespace randtree {

/// Base of every error raised by the library. The CLI maps ConfigError to
/// exit code 1 and everything else derived from NumericError to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public NumericError {
 public:
  using NumericError::NumericError;
};

// Iteration cap reached before the stopping rule was met.
class ConvergenceError : public NumericError {
 public:
  using NumericError::NumericError;
};

class GridError : public NumericError {
 public:
  using NumericError::NumericError;
};

class InstabilityError : public NumericError {
 public:
  using NumericError::NumericError;
};

class NonmonotoneError : public NumericError {
 public:
  using NumericError::NumericError;
};

// A scheme that provably diverges for the given parameters (e.g. the
// lifetime iteration above the critical intensity).
class NoConvergence : public NumericError {
 public:
  using NumericError::NumericError;
};

class TailNotFlat : public NumericError {
 public:
  using NumericError::NumericError;
};

class NoSaddle : public NumericError {
 public:
  using NumericError::NumericError;
};

class RangeError : public NumericError {
 public:
  using NumericError::NumericError;
};

class SlowConvergence : public NumericError {
 public:
  using NumericError::NumericError;
};

class DegenerateError : public NumericError {
 public:
  using NumericError::NumericError;
};

class InconsistencyError : public NumericError {
 public:
  using NumericError::NumericError;
};

class Infeasible : public NumericError {
 public:
  using NumericError::NumericError;
};

class InsufficientData : public NumericError {
 public:
  using NumericError::NumericError;
};

class CapExceeded : public Error {
 public:
  using Error::Error;
};

}  // namespace randtree
