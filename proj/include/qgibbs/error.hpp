#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace qgibbs {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dimension mismatch between vectors, matrices or datasets.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration value; the message names the offending key.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// File or stream failure, including malformed CSV.
class IoError : public Error {
 public:
  using Error::Error;
};

class ParseError : public IoError {
 public:
  ParseError(const std::string& what, std::int64_t row, std::int64_t column)
      : IoError(what), row_(row), column_(column) {}

  std::int64_t row() const { return row_; }
  std::int64_t column() const { return column_; }

 private:
  std::int64_t row_;
  std::int64_t column_;
};

/// A sampler or solver produced a non-finite iterate.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::int64_t iteration)
      : Error(what), iteration_(iteration) {}

  std::int64_t iteration() const { return iteration_; }

 private:
  std::int64_t iteration_;
};

}  // namespace qgibbs
