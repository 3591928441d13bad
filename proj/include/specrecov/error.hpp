#pragma once

#include <stdexcept>
#include <string>

namespace specrecov {

enum class ErrorCode {
  config = 2,
  training_divergence = 3,
  suite_validation = 4,
  rejected_input = 5,
  unsupported_action = 6,
  invalid_script = 7,
  insufficient_data = 8,
  reconstruction_expired = 9,
  undefined_metric = 10,
};

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const { return code_; }

  // Process exit code for the CLI; non-config internal errors map to 1.
  int exit_code() const {
    switch (code_) {
      case ErrorCode::config: return 2;
      case ErrorCode::training_divergence: return 3;
      case ErrorCode::suite_validation: return 4;
      default: return 1;
    }
  }

private:
  ErrorCode code_;
};

}  // namespace specrecov
