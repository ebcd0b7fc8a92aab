#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace piag {

// Malformed input text (LIBSVM rows, config files, CSV traces). Carries the
// 1-based line number of the offending line.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class UnsupportedLabelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a diagnostic needs min F but no reference value was supplied.
class MissingReferenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when the supplied reference min F is contradicted by the trace.
class InconsistentReferenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace piag
