#include "offload/core/error.hpp"

namespace offload {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::LinkDown: return "LinkDown";
    case ErrorCode::DuplicateClass: return "DuplicateClass";
    case ErrorCode::UnknownClass: return "UnknownClass";
    case ErrorCode::NotProfiled: return "NotProfiled";
    case ErrorCode::DuplicateRecord: return "DuplicateRecord";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::InstanceTooLarge: return "InstanceTooLarge";
    case ErrorCode::DuplicateTask: return "DuplicateTask";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::ProtocolError: return "ProtocolError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IncomparableRuns: return "IncomparableRuns";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace offload
