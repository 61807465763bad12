#pragma once

#include <stdexcept>

namespace qkdnet {

/// Invalid lengths or out-of-range parameters passed to a primitive.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The network cannot support the requested fault tolerance (x <= f, C <= f).
class InfeasibleNetworkError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qkdnet
