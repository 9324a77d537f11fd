#pragma once

#include <stdexcept>
#include <string>

namespace gsheaf {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid generator / operation parameters.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Operand dimensions do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A matrix that must be invertible (or positive definite) is not.
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// Graph structure violates an operator precondition (isolated node, ...).
class DegeneracyError : public Error {
 public:
  using Error::Error;
};

/// Walk through the graph uses a non-edge.
class PathError : public Error {
 public:
  using Error::Error;
};

/// NaN / Inf encountered in a numerical routine.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Cholesky factorization failed even after the jitter schedule.
class FactorizationError : public Error {
 public:
  using Error::Error;
};

/// Input file does not match the expected schema.
class SchemaError : public Error {
 public:
  using Error::Error;
};

}  // namespace gsheaf
