#pragma once

#include <stdexcept>
#include <string>

namespace dwm {

/// Shape disagreement between kernels, policies, costs or attack matrices.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A matrix that should be a probability object is not one.
class InvalidModel : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The chain has no unique, aperiodic recurrent class, or an iterative
/// solver failed to converge on it.
class NonErgodicChain : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Experiment configuration could not be parsed or validated.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dwm
