#pragma once

#include <stdexcept>
#include <string>

namespace mssflow {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A documented precondition of an operation was violated.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// The flow left the length-decreasing regime far enough to trip the guard.
class BlowUpError : public Error {
 public:
  using Error::Error;
};

class NonFiniteError : public Error {
 public:
  using Error::Error;
};

/// Gaussian-density kernel support leaked past an artificial truncation.
class UndercoverageError : public Error {
 public:
  using Error::Error;
};

}  // namespace mssflow
