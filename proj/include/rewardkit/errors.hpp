#pragma once

#include <stdexcept>
#include <string>

namespace rewardkit {

// Bad configuration or a violated input precondition. Maps to CLI exit code 1.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input data failed validation (rollout logs, matrix files). Exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A reward could not be computed: service failure, unparseable judge reply,
// degenerate embedding. Groups hitting this are quarantined. Exit code 2.
class ScoringError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rewardkit
