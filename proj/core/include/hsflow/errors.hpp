#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hsflow {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// User-facing input problems: malformed files, invalid models, bad arguments.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A bidegree outside [0, n] x [0, n], or an operation whose result would leave it.
class DegreeError : public InputError {
 public:
  using InputError::InputError;
};

class ParseError : public InputError {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& message);

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// A model that parses but violates a structural requirement (d^2 != 0, ...).
class ValidationError : public InputError {
 public:
  using InputError::InputError;
};

/// An operation whose mathematical precondition does not hold for the input.
/// Carries the measured residual so callers can report how far off it was.
class PreconditionError : public InputError {
 public:
  PreconditionError(const std::string& message, double residual)
      : InputError(message), residual_(residual) {}

  double residual() const { return residual_; }

 private:
  double residual_;
};

/// The metric is not Hermitian-symplectic, so the torsion form is undefined.
class NotHermitianSymplectic : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

/// A metric that fails to be positive definite at some evaluation node.
class PositivityError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

/// An internal consistency check failed (two routes disagree, an identity
/// that must hold exactly does not). Signals a regression, not bad input.
class NumericalContractError : public Error {
 public:
  using Error::Error;
};

}  // namespace hsflow
