#pragma once

#include <stdexcept>
#include <string>

namespace lvar {

// Invalid user configuration (bad keys, negative schedules, unknown codes).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input data that violates a precondition (non-positive log input, short panel,
// zero-variance column, underdetermined refit, ...).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical failure that cannot be reported as a flag (e.g. every grid point failed).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lvar
