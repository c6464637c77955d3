#pragma once

#include <stdexcept>
#include <string>

namespace epifilm {

/// Base class of all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input (profile, measure, parameters).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A dislocation core that does not fit inside the film.
class InadmissiblePlacement : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// Mesh generation or linear-solver failure.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Configuration file errors; carries the offending line or key.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace epifilm
