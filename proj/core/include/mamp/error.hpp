#pragma once

#include <stdexcept>

namespace mamp {

// Process exit codes used by the CLI front end.
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitDataError = 3;
inline constexpr int kExitNumericalError = 4;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Violated API precondition: a caller bug, not bad user input.
struct ContractViolation : std::logic_error {
  using std::logic_error::logic_error;
};

}  // namespace mamp
