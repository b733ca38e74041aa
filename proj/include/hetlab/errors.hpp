#pragma once

#include <stdexcept>
#include <string>

namespace hetlab {

/// Invalid parameters or configuration. Maps to CLI exit code 1.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Failure inside a numerical procedure (step underflow, bracket failure,
/// singular evaluation, ...). Maps to CLI exit code 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Evaluation of the circle map on (or within round-off of) its singular set.
class SingularityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// File-system or serialization failure. Maps to CLI exit code 3.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hetlab
