#pragma once

#include <stdexcept>
#include <string>

namespace ndm {

/// Base class for all errors raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (CSV rows, rosters, covariates).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure: singular designs, poles of the log-determinant, eigen failures.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Bad configuration or command-line usage.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace ndm
