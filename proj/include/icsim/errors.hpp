#pragma once

#include <stdexcept>
#include <string>

namespace icsim {

/// Malformed or inconsistent configuration. `field()` names the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class LookupError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// An action was aimed at a target kind it does not apply to.
class InvalidTarget : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Operation issued in the wrong episode phase (e.g. stepping after done).
class LifecycleError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace icsim
