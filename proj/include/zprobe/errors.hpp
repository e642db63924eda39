#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace zprobe {

/// Invalid input data or a violated contract (bad grid, schema violation, ...).
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Filesystem-level failure (missing file, unwritable output, ...).
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed text input. Always carries the 1-based line number.
struct ParseError : ValidationError {
  std::size_t line;

  ParseError(std::size_t line_no, const std::string& message)
      : ValidationError("line " + std::to_string(line_no) + ": " + message),
        line(line_no) {}
};

}  // namespace zprobe
