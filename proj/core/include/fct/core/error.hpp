#pragma once

#include <stdexcept>
#include <string>

namespace fct {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes are incompatible with the operation.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A value lies outside the mathematical domain of the operation (log(x <= 0)).
class DomainError : public Error {
 public:
  using Error::Error;
};

// A transform length or a spatial size is not supported.
class SizeError : public Error {
 public:
  using Error::Error;
};

// A structural invariant of an input value is violated.
class InvariantError : public Error {
 public:
  using Error::Error;
};

// A non-finite value appeared; the message names the stage where it was seen.
class NumericError : public Error {
 public:
  NumericError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

// Malformed file, manifest or configuration.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace fct
