#pragma once

#include <stdexcept>
#include <string>

namespace ranksens {

/// Malformed input data (bad row, bad number). Carries a 1-based line number
/// when the source is a line-oriented file.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, long line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg),
        line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

/// Structurally valid input that violates a domain rule (negative timestamp,
/// empty dataset after filtering, ...).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite value encountered during model training.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ranksens
