#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tte {

// Root of every exception the library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data (file schema, cohort invariants).
class DataError : public Error {
 public:
  using Error::Error;
};

// Bad caller arguments: percentiles out of range, unknown scenario ids, etc.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Base for failures of a numerical procedure on otherwise valid input.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class SeparationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SingularDesignError : public NumericalError {
 public:
  SingularDesignError(const std::string& what, std::size_t column)
      : NumericalError(what), column_(column) {}
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t column_;
};

class ConvergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class PositivityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class FitError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace tte
