#pragma once

#include <stdexcept>
#include <string>

namespace consensus {

// Base for everything the library throws on purpose.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Caller misuse: bad flag combinations, mismatched k, unknown metric.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Malformed or constraint-violating input data.
class DataError : public Error {
 public:
  using Error::Error;
};

// Syntax errors while reading a dataset; carries position and node path.
class ParseError : public DataError {
 public:
  ParseError(const std::string& msg, int line, int column, std::string path)
      : DataError(msg + " (line " + std::to_string(line) + ", column " +
                  std::to_string(column) + (path.empty() ? "" : ", at " + path) + ")"),
        line_(line),
        column_(column),
        path_(std::move(path)) {}

  int line() const { return line_; }
  int column() const { return column_; }
  const std::string& path() const { return path_; }

 private:
  int line_;
  int column_;
  std::string path_;
};

// An enumeration or search space exceeded its configured limit.
class LimitError : public Error {
 public:
  using Error::Error;
};

// A flow/matching instance admits no solution.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

// A property the algorithms guarantee failed to hold; indicates a bug.
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace consensus
