#pragma once

#include <stdexcept>
#include <string>

namespace prqkd {

// Bad configuration or out-of-range input. The CLI maps this to exit code 1.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// File could not be opened, read or written. Exit code 2.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Not enough sifted bits to form an estimate.
class InsufficientStatistics : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

}  // namespace prqkd
