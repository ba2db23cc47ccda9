#pragma once

#include <stdexcept>
#include <string>

namespace optikv {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Static misconfiguration: mismatched vector sizes, unknown presets,
// unmapped variables, bad policy strings.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed wire data: bad frames, undecodable clocks, schema violations.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

// Physical clock ran backwards relative to a stamped event.
class ClockError : public Error {
 public:
  using Error::Error;
};

// Predicate XML rejection; carries a line/column location.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line, int col)
      : Error(what + " (line " + std::to_string(line) + ", col " +
              std::to_string(col) + ")"),
        line_(line),
        col_(col) {}
  int line() const { return line_; }
  int col() const { return col_; }

 private:
  int line_;
  int col_;
};

}  // namespace optikv
