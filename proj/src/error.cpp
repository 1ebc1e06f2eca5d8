#include "pdlvo/error.h"

namespace pdlvo {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NearSingularRotation: return "NearSingularRotation";
    case ErrorCode::NonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::BehindCamera: return "BehindCamera";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::WrongCameraCount: return "WrongCameraCount";
    case ErrorCode::NonIdentityBodyFrame: return "NonIdentityBodyFrame";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::EmptyScan: return "EmptyScan";
    case ErrorCode::InsufficientResiduals: return "InsufficientResiduals";
    case ErrorCode::Diverged: return "Diverged";
    case ErrorCode::WindowTooSmall: return "WindowTooSmall";
    case ErrorCode::WindowNotFull: return "WindowNotFull";
    case ErrorCode::BadFrameCount: return "BadFrameCount";
    case ErrorCode::DegenerateAlignment: return "DegenerateAlignment";
    case ErrorCode::NoAssociations: return "NoAssociations";
    case ErrorCode::MissingView: return "MissingView";
    case ErrorCode::MissingScan: return "MissingScan";
    case ErrorCode::NonMonotoneTimestamps: return "NonMonotoneTimestamps";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::TrackingLost: return "TrackingLost";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace pdlvo
