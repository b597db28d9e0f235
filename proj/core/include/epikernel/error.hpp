#pragma once

#include <stdexcept>
#include <string>

namespace epikernel {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad configuration or invalid parameter values supplied by the caller.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Anything wrong with input data files.
class DataError : public Error {
 public:
  using Error::Error;
};

class IoError : public DataError {
 public:
  using DataError::DataError;
};

class ParseError : public DataError {
 public:
  using DataError::DataError;
};

class DimensionError : public DataError {
 public:
  using DataError::DataError;
};

class InvariantError : public DataError {
 public:
  using DataError::DataError;
};

/// A week has no distance range where one is required.
class StructuralError : public DataError {
 public:
  using DataError::DataError;
};

/// Non-finite posterior, singular prior matrix, failed root bracketing.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace epikernel
