#pragma once

#include <stdexcept>
#include <string>

namespace volnet {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad user input: configuration, arguments, malformed files. The CLI maps
/// these to exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

/// A stored artifact failed its checksum or could not be parsed back.
class CorruptDataError : public Error {
 public:
  using Error::Error;
};

/// Degenerate numerics (zero variance, singular inputs) that make a result
/// undefined.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace volnet
