#pragma once

#include <stdexcept>
#include <string>

namespace eaf {

// Bad input data: malformed model, inconsistent dimensions, invalid parameters.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Operands whose dimensions do not agree with the model.
class DimensionError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// Evaluation point too close to a singularity of the invariant measure.
class SingularityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Failures discovered while a computation is running.
class RuntimeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A state component exceeded the blow-up threshold.
class BlowUpError : public RuntimeFailure {
 public:
  BlowUpError(const std::string& what, double last_valid_time)
      : RuntimeFailure(what), last_valid_time_(last_valid_time) {}

  double last_valid_time() const noexcept { return last_valid_time_; }

 private:
  double last_valid_time_;
};

class ConvergenceError : public RuntimeFailure {
 public:
  using RuntimeFailure::RuntimeFailure;
};

}  // namespace eaf
