#pragma once

#include <stdexcept>
#include <string>

namespace odm {

// Bad usage or inconsistent configuration/constraints (CLI exit code 1).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numeric failure at run time: non-finite state, overflow, ... (CLI exit code 2).
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace odm
