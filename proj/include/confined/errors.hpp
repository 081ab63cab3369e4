#pragma once

#include <stdexcept>
#include <string>

namespace confined {

/// Bad usage or configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Non-finite numerics (CLI exit code 3).
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// Containment/validation failure (CLI exit code 4).
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& what)
      : std::runtime_error(what) {}
};

}  // namespace confined
