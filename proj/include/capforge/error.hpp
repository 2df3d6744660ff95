#pragma once

#include <stdexcept>
#include <string>

namespace capforge {

// Base for everything thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Incompatible matrix/vector shapes.
struct DimensionError : Error {
  using Error::Error;
};

// Invalid configuration (bad patch size, k out of range, ...).
struct ConfigError : Error {
  using Error::Error;
};

// Bad input data: unreadable file, malformed CSV, non-monotone cycles.
struct DataError : Error {
  using Error::Error;
};

// Non-finite value where a finite one is required.
struct NumericError : Error {
  using Error::Error;
};

// Training produced a non-finite loss. Carries the epoch it happened in.
struct DivergenceError : Error {
  DivergenceError(std::size_t epoch, const std::string& what)
      : Error(what), epoch(epoch) {}
  std::size_t epoch;
};

// Violated internal invariant (e.g. inconsistent dispatch index map).
struct InternalError : Error {
  using Error::Error;
};

}  // namespace capforge
