#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace btpk {

/// Malformed input data (corpus files, model files, BTPK documents, configs).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad arguments to a library call (out-of-range ids, empty inputs, ...).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised by parse_conll; carries the 1-based offending line.
class ConllError : public DataError {
 public:
  ConllError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace btpk
