#pragma once

#include <stdexcept>
#include <string>

namespace dbm {

// Bad input: maps to CLI exit code 2.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numerical procedure failed to converge or lost too much precision: exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Even the extended-precision Lagrange path could not meet its tolerance.
class PrecisionExhausted : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace dbm
