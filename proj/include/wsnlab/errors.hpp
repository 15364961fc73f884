#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace wsnlab {

// Every failure the library raises derives from one of two bases so the CLI
// can map them onto exit codes: DataError -> 2, NumericalError -> 3.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidConfigError : public DataError {
 public:
  using DataError::DataError;
};

// Value vector does not line up with the descriptors it is checked against.
class ArityError : public DataError {
 public:
  using DataError::DataError;
};

class InsufficientDataError : public DataError {
 public:
  using DataError::DataError;
};

class LookupError : public DataError {
 public:
  using DataError::DataError;
};

class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : DataError(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ZeroVarianceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class RankDeficiencyError : public NumericalError {
 public:
  RankDeficiencyError(const std::string& what, std::vector<std::string> columns)
      : NumericalError(what), columns_(std::move(columns)) {}

  const std::vector<std::string>& columns() const noexcept { return columns_; }

 private:
  std::vector<std::string> columns_;
};

}  // namespace wsnlab
