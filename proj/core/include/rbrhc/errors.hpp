#pragma once

#include <stdexcept>
#include <string>

namespace rbrhc {

/// The observation is (numerically) impossible under every motion pattern.
class DegenerateObservation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A belief was queried past the end of an agent's predicted trajectory.
class HorizonExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The planning graph has no path spanning the horizon or reaching the goal.
class InfeasibleGraph : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Exact enumeration would exceed its history-tree node cap.
class InstanceTooLarge : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Scenario or run configuration is inconsistent.
class ConfigError : public std::runtime_error {
 public:
  enum class Kind { kMissingFile, kSyntax, kUnknownKey, kValidation };

  ConfigError(Kind kind, std::string field, int line, const std::string& message)
      : std::runtime_error(message), kind_(kind), field_(std::move(field)), line_(line) {}

  Kind kind() const { return kind_; }
  const std::string& field() const { return field_; }
  /// 1-based line in the source file, 0 when unknown.
  int line() const { return line_; }

 private:
  Kind kind_;
  std::string field_;
  int line_;
};

const char* to_string(ConfigError::Kind kind);

}  // namespace rbrhc
