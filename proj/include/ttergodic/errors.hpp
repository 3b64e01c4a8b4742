#pragma once

#include <stdexcept>
#include <string>

namespace ttergodic {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BoundsError : public Error {
 public:
  using Error::Error;
};

/// Operand shapes (mode sizes, dimensions) do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// A dense materialization would exceed the oracle-scale size guard.
class SizeError : public Error {
 public:
  using Error::Error;
};

/// A point lies outside the domain an operation is defined on.
class DomainError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

/// An iterative method ran out of budget; carries its last error estimate.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double estimate)
      : Error(what), estimate_(estimate) {}

  double estimate() const noexcept { return estimate_; }

 private:
  double estimate_;
};

}  // namespace ttergodic
