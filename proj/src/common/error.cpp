#include "common/error.hpp"

namespace wgv {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidResolution: return "InvalidResolution";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::KeypointOutOfBounds: return "KeypointOutOfBounds";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::UnknownId: return "UnknownId";
    case ErrorCode::CorruptFile: return "CorruptFile";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::MissingTorso: return "MissingTorso";
    case ErrorCode::DimensionError: return "DimensionError";
    case ErrorCode::NonBinaryError: return "NonBinaryError";
    case ErrorCode::UninitializedModel: return "UninitializedModel";
    case ErrorCode::OddHeight: return "OddHeight";
    case ErrorCode::EmptyScores: return "EmptyScores";
    case ErrorCode::LayerCountMismatch: return "LayerCountMismatch";
    case ErrorCode::NegativeWeight: return "NegativeWeight";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::DivergedLoss: return "DivergedLoss";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::ChannelMismatch: return "ChannelMismatch";
    case ErrorCode::EmptyTargetRegion: return "EmptyTargetRegion";
    case ErrorCode::TooSmall: return "TooSmall";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Locked: return "Locked";
  }
  return "Unknown";
}

}  // namespace wgv
