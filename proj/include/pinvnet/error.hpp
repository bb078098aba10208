#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pinvnet {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "invalid-argument"; }
};

class InvalidConfiguration : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "invalid-configuration"; }
};

/// An activation inverse was asked to evaluate outside its domain.
class DomainViolation : public Error {
 public:
  DomainViolation(std::size_t row, std::size_t col, double value, double lower_bound)
      : Error("value " + std::to_string(value) + " at (" + std::to_string(row) + ", " +
              std::to_string(col) + ") is not above the inverse-domain bound " +
              std::to_string(lower_bound)),
        row_(row),
        col_(col),
        value_(value) {}

  const char* kind() const noexcept override { return "domain-violation"; }
  std::size_t row() const noexcept { return row_; }
  std::size_t col() const noexcept { return col_; }
  double value() const noexcept { return value_; }

 private:
  std::size_t row_;
  std::size_t col_;
  double value_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  const char* kind() const noexcept override { return "parse-error"; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class FileNotFound : public Error {
 public:
  explicit FileNotFound(const std::string& path)
      : Error("cannot open file: " + path), path_(path) {}
  const char* kind() const noexcept override { return "file-not-found"; }
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace pinvnet
