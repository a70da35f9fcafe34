#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wgv {

// Every failure raised by the core carries one of these codes. The C API maps
// them 1:1 onto wgv_status values, and the CLI prints their names.
enum class ErrorCode {
  IoError = 1,
  InvalidResolution,
  InvalidArgument,
  ShapeMismatch,
  KeypointOutOfBounds,
  TooFewSamples,
  UnknownId,
  CorruptFile,
  SchemaMismatch,
  MissingTorso,
  DimensionError,
  NonBinaryError,
  UninitializedModel,
  OddHeight,
  EmptyScores,
  LayerCountMismatch,
  NegativeWeight,
  EmptyDataset,
  DivergedLoss,
  SingularSystem,
  ChannelMismatch,
  EmptyTargetRegion,
  TooSmall,
  DimensionMismatch,
  InvalidConfig,
  Locked,
};

std::string_view to_string(ErrorCode code) noexcept;

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

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace wgv
