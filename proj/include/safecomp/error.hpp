#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace safecomp {

// Base of every error the toolkit throws on bad input.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Malformed text input. `line` is 1-based; `column` is 1-based or 0 when the
// whole line is at fault.
class ParseError : public Error {
public:
  ParseError(std::size_t line, std::size_t column, const std::string& what);

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

private:
  std::size_t line_;
  std::size_t column_;
};

class DimensionError : public Error {
public:
  DimensionError(const std::string& context, std::size_t expected, std::size_t got);
};

} // namespace safecomp
