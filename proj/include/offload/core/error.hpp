#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace offload {

enum class ErrorCode {
  InvalidParameter,
  LinkDown,
  DuplicateClass,
  UnknownClass,
  NotProfiled,
  DuplicateRecord,
  InsufficientData,
  InstanceTooLarge,
  DuplicateTask,
  NotFound,
  ProtocolError,
  ConfigError,
  IncomparableRuns,
  IoError,
};

std::string_view to_string(ErrorCode code);

// All library failures surface as this exception type; callers switch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace offload
