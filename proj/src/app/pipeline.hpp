#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "data/types.hpp"
#include "guide/wearing_guide.hpp"
#include "scwm/scwm.hpp"
#include "tom/tom.hpp"
#include "wgpgm/wgpgm.hpp"

namespace wgv {

struct PipelinePaths {
  std::filesystem::path wgpgm;
  std::filesystem::path scwm;
  std::filesystem::path tom;
};

// The three trained modules, loaded once and shared read-only.
struct PipelineModels {
  wgpgm::Model parsing;
  scwm::Model warp;
  tom::Model synth;
  Resolution resolution{};

  // Throws SchemaMismatch when the checkpoints disagree on resolution.
  static PipelineModels load(const PipelinePaths& paths);
};

struct TryOnInputs {
  ImageRGB agnostic_image;
  ParsingMap agnostic_parsing;
  PoseKeypoints keypoints;
  GarmentRecord top;
  std::optional<GarmentRecord> bottom;
  WearingGuideMask mask;

  // Inputs of a dataset sample wearing its own garments.
  static TryOnInputs from_sample(const SampleRecord& sample, WearingGuideMask mask);
};

struct TryOnResult {
  ParsingMap parsing;
  ImageRGB warped_top;
  ImageRGB warped_bottom;
  ImageRGB final_image;
};

// Parsing generation, warping, synthesis and composition for one person.
TryOnResult full_pipeline_infer(const TryOnInputs& inputs, const PipelineModels& models);

// Writes `<stem>_{parsing,warped_top,warped_bottom,final}.png` and
// `<stem>.json` holding those file names; returns the index.
nlohmann::json write_bundle(const TryOnResult& result, const std::filesystem::path& dir, const std::string& stem);

// Default mask for a person with no garment-specific hem: the mid-hip row.
HemMask mid_hip_hem(const PoseKeypoints& keypoints, Resolution res);

}  // namespace wgv
