#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kgc {

enum class ErrorCode {
  DuplicatePosition,
  PositionOutOfRange,
  MissingPosition,
  InvariantViolation,
  ParseError,
  EncoderUnavailable,
  InvalidK,
  EmptyCluster,
  OffsetError,
  DanglingRef,
  SplitError,
  EpisodeInfeasible,
  InvalidFold,
  DimensionMismatch,
  InvalidGold,
  TrainingDiverged,
  IncompleteSupport,
  MissingAdjudication,
  StoreClosed,
  NotFound,
  BindError,
  IoError,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code);

// Every recoverable failure in the toolkit is reported through this type.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace kgc
