#pragma once

#include <stdexcept>
#include <string>

namespace mqf {

/// Operand dimensions do not match what an operation requires.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A value lies outside the domain an operation is defined on.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// API misuse, e.g. backpropagating through a tape from another network.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A run configuration is malformed. `field()` names the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field.empty() ? message : field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// A checkpoint cannot be read or does not fit the requested scenario.
class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter, activation or loss became NaN/Inf.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mqf
