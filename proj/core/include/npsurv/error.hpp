#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace npsurv {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The data do not carry enough information for the requested estimate
/// (empty group, zero variance increment, failed spline fit, ...).
class EstimationError : public Error {
 public:
  using Error::Error;
};

/// Quadrature, root bracketing or optimisation did not converge.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. `row()` is 1-based and counts the header line.
class ParseError : public Error {
 public:
  ParseError(std::size_t row, const std::string& what)
      : Error("row " + std::to_string(row) + ": " + what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

}  // namespace npsurv
