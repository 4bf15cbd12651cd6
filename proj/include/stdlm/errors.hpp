#pragma once

#include <stdexcept>
#include <string>

namespace stdlm {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad parameter values or run configuration (CLI exit code 2).
struct ConfigError : Error {
  using Error::Error;
};

// Malformed input files (CLI exit code 3).
struct IngestError : Error {
  using Error::Error;
};

// Numerical breakdown, e.g. a covariance that cannot be factorized even
// after the jitter retry (CLI exit code 4).
struct NumericalError : Error {
  explicit NumericalError(const std::string& what, long time_index = -1)
      : Error(what), time_index(time_index) {}
  long time_index;  // column where the breakdown happened, -1 if n/a
};

// Violated call contract: mismatched dimensions, unfilled panels, etc.
struct ContractError : Error {
  using Error::Error;
};

}  // namespace stdlm
