#pragma once

#include <stdexcept>
#include <string>

namespace kdann {

/// Caller violated a precondition (bad dimension, k > n, invalid parameter).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Tree construction produced a structurally invalid node.
class ConstructionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A search result disagrees with the brute-force oracle.
class OracleViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Experiment configuration rejected; the message names the offending field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace kdann
