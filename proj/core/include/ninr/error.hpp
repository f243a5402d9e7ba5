#pragma once

#include <stdexcept>
#include <string>

namespace ninr {

// Raised for inconsistent tensor/layer extents.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised for invalid user-supplied parameters (distributions, optimizers, presets).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when a binary container (IDX, CIFAR, checkpoint) cannot be decoded.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when an operation is called in the wrong state (stale cache, missing attachment).
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Raised when a computation produced non-finite values where finite ones are required.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ninr
