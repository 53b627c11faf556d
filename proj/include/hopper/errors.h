#pragma once

#include <stdexcept>

namespace hopper {

// Invalid user input: configuration, presets, workload parameters.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Fatal simulator logic error: an invariant the model relies on was broken.
class SimulationError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace hopper
