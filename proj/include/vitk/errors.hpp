#pragma once

#include <stdexcept>
#include <string>

namespace vitk {

/// Invalid configuration: unknown example, degenerate grid, bad flag values.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A documented precondition of an operation was violated by the caller.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// On-disk artifact is truncated, inconsistent or from an unsupported version.
class CorruptionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical breakdown (NaN loss, singular system without regularization).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace vitk
