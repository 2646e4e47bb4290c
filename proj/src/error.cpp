#include "kgc/error.hpp"

namespace kgc {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DuplicatePosition: return "DuplicatePosition";
    case ErrorCode::PositionOutOfRange: return "PositionOutOfRange";
    case ErrorCode::MissingPosition: return "MissingPosition";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::EncoderUnavailable: return "EncoderUnavailable";
    case ErrorCode::InvalidK: return "InvalidK";
    case ErrorCode::EmptyCluster: return "EmptyCluster";
    case ErrorCode::OffsetError: return "OffsetError";
    case ErrorCode::DanglingRef: return "DanglingRef";
    case ErrorCode::SplitError: return "SplitError";
    case ErrorCode::EpisodeInfeasible: return "EpisodeInfeasible";
    case ErrorCode::InvalidFold: return "InvalidFold";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidGold: return "InvalidGold";
    case ErrorCode::TrainingDiverged: return "TrainingDiverged";
    case ErrorCode::IncompleteSupport: return "IncompleteSupport";
    case ErrorCode::MissingAdjudication: return "MissingAdjudication";
    case ErrorCode::StoreClosed: return "StoreClosed";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::BindError: return "BindError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace kgc
