#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mmc {

/// Malformed arguments to a model or controller operation (bad lengths, counts out of range).
class InvalidInput : public std::invalid_argument {
 public:
    using std::invalid_argument::invalid_argument;
};

/// Physically or structurally unusable configuration (non-positive inductance, R = 0 for
/// the controller, unknown scenario keys, ...).
class ConfigError : public std::runtime_error {
 public:
    using std::runtime_error::runtime_error;
};

/// No offset voltage can make the constant charging term positive (Vdc^2 < C0).
class InfeasibleOperatingPoint : public std::domain_error {
 public:
    using std::domain_error::domain_error;
};

class SimulationDiverged : public std::runtime_error {
 public:
    SimulationDiverged(std::size_t step, const std::string& what)
        : std::runtime_error(what), step_(step) {}

    std::size_t step() const noexcept { return step_; }

 private:
    std::size_t step_;
};

}  // namespace mmc
