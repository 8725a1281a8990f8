#pragma once

#include <stdexcept>
#include <string>

namespace oamtomo {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value or argument outside the documented domain of an operation.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A sampling grid that does not hold the requested field.
class GridTooSmall : public Error {
 public:
  using Error::Error;
};

/// Two fields sampled on different grids.
class GridMismatch : public Error {
 public:
  using Error::Error;
};

/// Least-squares fits that diverge or start from degenerate data.
class FitError : public Error {
 public:
  using Error::Error;
};

/// Data missing for a reconstruction (empty bins, zero counts, rank loss).
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace oamtomo
