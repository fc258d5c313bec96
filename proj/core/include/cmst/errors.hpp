#pragma once

#include <stdexcept>
#include <string>

namespace cmst {

// Error taxonomy. Every category maps to a stable CLI exit code, so new
// failure kinds must extend this hierarchy rather than throw raw exceptions.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Incompatible matrix/network dimensions.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// API called out of order, e.g. backward without a preceding forward.
class StateError : public Error {
 public:
  using Error::Error;
};

// Invalid argument values (empty dataset, k out of range, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

// Invalid or inconsistent configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed file contents (bad magic, truncated payload, ...).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Filesystem failures.
class IoError : public Error {
 public:
  using Error::Error;
};

// Non-finite values where finite ones are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Training aborted because a loss went non-finite or above the guard bound.
class DivergenceError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace cmst
