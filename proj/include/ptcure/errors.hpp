#pragma once

#include <stdexcept>
#include <string>

namespace ptcure {

// Invalid inputs, malformed files, contract violations. CLI exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite losses/gradients, diverged fits. CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace ptcure
