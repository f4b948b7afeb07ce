#pragma once

#include <stdexcept>
#include <string>

namespace slim {

// Root of the library's exception hierarchy. The CLI maps each subclass
// onto a distinct exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or call arguments.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Malformed, missing or inconsistent input data (CSV, JSON, schema).
class DataError : public Error {
 public:
  using Error::Error;
};

// Dimension mismatch between numerical objects.
class DimensionError : public ArgumentError {
 public:
  using ArgumentError::ArgumentError;
};

// A numerical routine failed (non-convergence, saturated model, ...).
class NumericalError : public Error {
 public:
  using Error::Error;
};

// A continuous or categorical feature that takes a single value.
class ConstantFeatureError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace slim
