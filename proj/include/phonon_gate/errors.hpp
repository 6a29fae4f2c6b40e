#pragma once

#include <stdexcept>
#include <string>

namespace phonon_gate {

/// Operator or state dimensions do not line up.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A physical precondition is violated (trap destabilized, expansion
/// invalid, separation singular, ...).
class PhysicsError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class TrapDestabilizedError : public PhysicsError {
 public:
  using PhysicsError::PhysicsError;
};

class SingularSeparationError : public PhysicsError {
 public:
  using PhysicsError::PhysicsError;
};

class ExpansionInvalidError : public PhysicsError {
 public:
  using PhysicsError::PhysicsError;
};

/// Numerical failure: norm drift beyond budget, NaN, invalid step plan.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration parse/validation failure. `line` is 1-based, 0 when the
/// error does not come from a specific line (e.g. a --set override).
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& message, int line)
      : std::invalid_argument(line > 0 ? "line " + std::to_string(line) + ": " + message : message),
        line_(line) {}

  int line() const noexcept { return line_; }

 private:
  int line_;
};

}  // namespace phonon_gate
