#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace advica {

/// Invalid shapes, hyper-parameters or configuration keys.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An operation was called out of order (e.g. backward before forward).
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Failure while reading external data (WAV, CSV, checkpoints).
class IngestionError : public std::runtime_error {
 public:
  IngestionError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  explicit IngestionError(const std::string& what) : std::runtime_error(what) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_ = 0;
};

/// Numerical failure: rank-deficient data, non-finite losses.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A training run produced a non-finite or runaway loss.
class DivergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace advica
