#pragma once

#include <stdexcept>
#include <string>

namespace tzsl {

// Coarse failure class. The CLI maps these onto its exit codes.
enum class ErrorKind { io, validation, numeric };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what)
      : Error(ErrorKind::validation, what) {}
};

// Dimension disagreement between two operands.
class ShapeError : public ValidationError {
 public:
  ShapeError(const std::string& context, std::size_t expected,
             std::size_t actual)
      : ValidationError(context + ": expected dimension " +
                        std::to_string(expected) + ", got " +
                        std::to_string(actual)),
        expected_(expected),
        actual_(actual) {}

  std::size_t expected() const noexcept { return expected_; }
  std::size_t actual() const noexcept { return actual_; }

 private:
  std::size_t expected_;
  std::size_t actual_;
};

// Malformed or inconsistent input file content.
class FormatError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what)
      : Error(ErrorKind::numeric, what) {}
};

}  // namespace tzsl
