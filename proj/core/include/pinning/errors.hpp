#pragma once

#include <stdexcept>
#include <string>

namespace pinning {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite data, dimension mismatch, or an argument outside its domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

class SymmetryError : public Error {
 public:
  using Error::Error;
};

/// A coupling matrix or scenario failed validation. `row`/`col` are 0-based
/// and -1 when the violation is not tied to an entry.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what, int row = -1, int col = -1)
      : Error(what), row_(row), col_(col) {}

  int row() const { return row_; }
  int col() const { return col_; }

 private:
  int row_;
  int col_;
};

class UnsupportedError : public Error {
 public:
  using Error::Error;
};

}  // namespace pinning
