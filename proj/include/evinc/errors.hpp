#pragma once

#include <stdexcept>
#include <string>

namespace evinc {

/// Bad arguments: dimension mismatches, invalid constants, malformed configs.
class InputError : public std::invalid_argument {
 public:
  explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

/// A request that exceeds a configured structural limit (e.g. vertex
/// enumeration above the dimension cap).
class CapacityError : public std::runtime_error {
 public:
  explicit CapacityError(const std::string& what) : std::runtime_error(what) {}
};

/// An inner solve failed to reach its tolerance; carries the final residual.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double residual)
      : std::runtime_error(what + " (residual=" + std::to_string(residual) + ")"),
        residual(residual) {}
  double residual;
};

/// An outer iteration hit its cap without contracting; carries the last ratio.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double last_ratio)
      : std::runtime_error(what + " (last ratio=" + std::to_string(last_ratio) + ")"),
        last_ratio(last_ratio) {}
  double last_ratio;
};

}  // namespace evinc
