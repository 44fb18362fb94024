#pragma once

#include <stdexcept>
#include <string>

namespace streamforge {

// Thrown when a caller breaks an operation contract (out-of-order cache
// insert, future-block context, and similar ordering violations).
struct ContractViolation : std::logic_error {
    explicit ContractViolation(const std::string& msg) : std::logic_error(msg) {}
};

// Bad construction-time parameters (non-SPD covariance, |rho| >= 1, ...).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Training produced non-finite values and was aborted.
struct DivergenceError : std::runtime_error {
    explicit DivergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace streamforge
