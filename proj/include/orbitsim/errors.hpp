#pragma once

#include <stdexcept>
#include <string>

namespace orbitsim {

/// Invalid configuration. `field()` names the offending key when known.
class ConfigError : public std::invalid_argument {
  public:
    explicit ConfigError(const std::string &msg, std::string field = {})
        : std::invalid_argument(msg), field_(std::move(field)) {}
    const std::string &field() const noexcept { return field_; }

  private:
    std::string field_;
};

/// Scenario generation could not place every entity without overlap.
class PlacementError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Fatal error while advancing a simulation (bad input, non-finite state).
class SimulationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

} // namespace orbitsim
