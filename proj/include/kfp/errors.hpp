#pragma once

#include <stdexcept>
#include <string>

namespace kfp {

// Bad user-facing configuration (CLI maps this to exit code 2).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A guard tripped: results exist but are not trustworthy (CLI exit code 3).
struct TrustError : std::runtime_error {
  explicit TrustError(const std::string& what) : std::runtime_error(what) {}
};

// Hard numerical failure (non-convergence, singular solve, overflow guard).
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace kfp
