#pragma once

#include <stdexcept>
#include <string>

namespace beamsep {

// Base of every error thrown by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Mismatched channel/sample/source counts between operands.
struct DimensionError : Error {
  using Error::Error;
};

// Invalid configuration or arguments.
struct ConfigError : Error {
  using Error::Error;
};

// File parsing / filesystem problems.
struct IoError : Error {
  using Error::Error;
};

// Non-finite values or a failed factorization.
struct NumericalError : Error {
  using Error::Error;
};

}  // namespace beamsep
