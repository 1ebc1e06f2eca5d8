#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pdlvo {

enum class ErrorCode {
  NearSingularRotation,
  NonPositiveDepth,
  BehindCamera,
  OutOfBounds,
  ParseError,
  WrongCameraCount,
  NonIdentityBodyFrame,
  IndexOutOfRange,
  EmptyScan,
  InsufficientResiduals,
  Diverged,
  WindowTooSmall,
  WindowNotFull,
  BadFrameCount,
  DegenerateAlignment,
  NoAssociations,
  MissingView,
  MissingScan,
  NonMonotoneTimestamps,
  EmptyDataset,
  TrackingLost,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so
// callers (tests, CLI exit-code mapping) can branch without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace pdlvo
