#pragma once

#include <stdexcept>
#include <string>

namespace scoretest {

// Base class for all library errors. Subclasses map to CLI exit codes:
// parse = 2, design/config = 3, numerical = 4.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// -- input / parse ----------------------------------------------------------

class ParseError : public Error {
 public:
  ParseError(const std::string& msg, long row = -1, long col = -1)
      : Error(locate(msg, row, col)), row_(row), col_(col) {}
  long row() const { return row_; }
  long col() const { return col_; }

 private:
  static std::string locate(const std::string& msg, long row, long col) {
    std::string s = msg;
    if (row >= 0) s += " (row " + std::to_string(row);
    if (row >= 0 && col >= 0) s += ", column " + std::to_string(col);
    if (row >= 0) s += ")";
    return s;
  }
  long row_;
  long col_;
};

class InvalidDataError : public Error {
 public:
  using Error::Error;
};

// -- design / configuration --------------------------------------------------

class DesignError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class EmptyInputError : public Error {
 public:
  using Error::Error;
};

// -- numerical ----------------------------------------------------------------

class ShapeError : public Error {
 public:
  using Error::Error;
};

class SingularError : public Error {
 public:
  using Error::Error;
};

class EigenError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class DegenerateScoreError : public Error {
 public:
  using Error::Error;
};

class DegenerateTargetError : public Error {
 public:
  using Error::Error;
};

class InvalidScoreError : public Error {
 public:
  using Error::Error;
};

}  // namespace scoretest
