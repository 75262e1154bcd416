#pragma once

#include <stdexcept>
#include <string>

namespace chef {

// Every failure the library reports derives from Error. The CLI maps the
// three families onto exit codes 2, 3 and 4.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user configuration (flags, hyperparameters, layer selections).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent data: corrupt files, shape disagreements,
/// labels out of range, infeasible episode requests.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Shapes of two operands do not agree.
class DimensionError : public DataError {
 public:
  using DataError::DataError;
};

/// Divergence, non-finite values, singular systems, non-PSD matrices.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace chef
