#pragma once

#include <stdexcept>
#include <string>

namespace uavnav {

// Shape disagreement between tensors or parameter blocks.
struct DimensionError : std::runtime_error {
    explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};

// API used outside its contract (e.g. backward on a non-scalar).
struct ContractError : std::logic_error {
    explicit ContractError(const std::string& msg) : std::logic_error(msg) {}
};

// Invalid configuration value or unknown key.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid runtime parameter (sigma < 0, lambda <= 0, ...).
struct ParameterError : std::runtime_error {
    explicit ParameterError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite value where a finite one is required.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Operation on an object in the wrong lifecycle state.
struct LifecycleError : std::logic_error {
    explicit LifecycleError(const std::string& msg) : std::logic_error(msg) {}
};

// Consumer asked for data that is not available yet (e.g. undersized buffer).
struct NotReadyError : std::runtime_error {
    explicit NotReadyError(const std::string& msg) : std::runtime_error(msg) {}
};

// Corrupt or incompatible file.
struct IntegrityError : std::runtime_error {
    explicit IntegrityError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace uavnav
