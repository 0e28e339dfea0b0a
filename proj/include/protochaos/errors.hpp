#pragma once

#include <stdexcept>
#include <string>

namespace protochaos {

/// Raised for bad user input: malformed config keys or files, shape and
/// dimension mismatches, violated preconditions. Maps to CLI exit code 1.
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Raised for I/O failures. Maps to CLI exit code 2.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Raised when training hits non-finite numerics. Maps to CLI exit code 2.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace protochaos
