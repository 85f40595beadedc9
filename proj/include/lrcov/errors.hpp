#pragma once

#include <stdexcept>
#include <string>

namespace lrcov {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operands live on different grids or have incompatible shapes.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Sample data unusable for the requested computation (empty, non-finite, degenerate).
class InputError : public Error {
 public:
  using Error::Error;
};

/// A numeric precondition on an argument was violated (asymmetric surface, h <= 0, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Kernel metadata disagrees with the kernel function itself.
class KernelSpecError : public Error {
 public:
  using Error::Error;
};

/// Operation is not defined for the given kernel or process (e.g. flat-top bias).
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// Statistical precondition failed: eigenvalue separation, non-positive eigenvalue, ...
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Malformed data file. Carries the 1-based row and column when known (0 otherwise).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t row, std::size_t column)
      : Error(what), row_(row), column_(column) {}
  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

/// Invalid run configuration or DGP/experiment settings.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace lrcov
