#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "app/config.hpp"
#include "app/training.hpp"
#include "data/manifest.hpp"
#include "data/types.hpp"
#include "nn/adam.hpp"
#include "nn/layers.hpp"
#include "scwm/tps.hpp"

namespace wgv::scwm {

// Top slice + bottom slice + pose heatmaps.
inline constexpr int kModelChannels = 2 + kNumKeypoints;
inline constexpr const char* kComponent = "scwm";

// Flattened inner products between the per-position feature vectors of two
// maps, position-major: volume[i * b_positions + j] = <a_i, b_j>.
struct FeatureMap {
  int channels = 0;
  int positions = 0;
  std::vector<double> values;  // planar, channels x positions
};
// Throws ChannelMismatch.
std::vector<double> correlation_match(const FeatureMap& a, const FeatureMap& b);

struct RegressionHead {
  nn::ConvBlock conv0;
  nn::ConvBlock conv1;
  nn::Linear fc;
};

// Model-branch and garment-branch encoders, one regression head per garment.
// The garment branch is a single parameter set applied to both garments.
class Model {
 public:
  Model() = default;
  Model(const ScwmSettings& settings, Resolution res, std::uint64_t seed);

  bool ready() const noexcept { return ready_; }
  const ScwmSettings& settings() const noexcept { return settings_; }
  Resolution resolution() const noexcept { return res_; }
  const ControlGrid& grid() const noexcept { return grid_; }
  const TpsBasis& basis() const { return *basis_; }

  // theta_top and theta_bt as (N, 2K, 1, 1) nodes.
  std::pair<nn::Var, nn::Var> predict(nn::Tape& t, nn::Var model_in, nn::Var top_image, nn::Var bottom_image) const;
  nn::Var encode_garment(nn::Tape& t, nn::Var image) const;

  nn::ParameterStore params;

 private:
  nn::Var encode(nn::Tape& t, const std::vector<nn::ConvBlock>& enc, nn::Var x) const;
  nn::Var regress(nn::Tape& t, const RegressionHead& head, nn::Var features, nn::Var garment) const;

  ScwmSettings settings_;
  Resolution res_{};
  ControlGrid grid_;
  std::shared_ptr<const TpsBasis> basis_;
  std::vector<nn::ConvBlock> model_enc_;
  std::vector<nn::ConvBlock> garment_enc_;
  RegressionHead head_top_;
  RegressionHead head_bt_;
  bool ready_ = false;
};

struct Thetas {
  TPSParams top;
  TPSParams bottom;
};

// Slices are single planar channels (garment-role probability sums).
// Throws ShapeMismatch / UninitializedModel.
Thetas forward(const Model& model, std::span<const float> top_slice, std::span<const float> bottom_slice,
               const PoseMap& pose, const GarmentRecord& top, const GarmentRecord& bottom);
// Slices taken from a parsing map by role.
Thetas forward(const Model& model, const ParsingMap& parsing, const PoseMap& pose, const GarmentRecord& top,
               const GarmentRecord& bottom);

struct WarpedGarment {
  ImageRGB image;
  std::vector<float> seg;  // background / main / secondary planes

  // Garment coverage: main + secondary.
  std::vector<float> mask() const;
  // Warped pixels restricted to the garment coverage.
  ImageRGB layer() const;
};
WarpedGarment apply_warp(const GarmentRecord& garment, const SamplingGrid& grid);

// Garment pixels and labels as worn in a sample.
struct WornTarget {
  bool present = false;
  ImageRGB color;
  std::vector<float> seg;     // 3 planes from the parsing roles
  std::vector<float> region;  // 1 inside the worn garment
};
WornTarget worn_target(const SampleRecord& sample, GarmentKind kind);

struct WarpLoss {
  double total = 0.0;
  // color_top, seg_top, color_bottom, seg_bottom (bottom terms only when the
  // sample wears a separate bottom) and bottom_present (0 or 1).
  std::map<std::string, double> components;
};
// Masked-mean color and segmentation L1 against the worn garments. Throws
// EmptyTargetRegion when the sample shows no top, ShapeMismatch on sizes.
WarpLoss scwm_loss(const ImageRGB& top_img, const std::vector<float>& top_seg, const ImageRGB& bt_img,
                   const std::vector<float>& bt_seg, const SampleRecord& target);

void save(const std::filesystem::path& path, const Model& model, const nn::Adam* opt, const TrainingConfig& cfg,
          std::int64_t step);
Model load(const std::filesystem::path& path);

// Loss curve: `<out_dir>/scwm_loss.csv`; final checkpoint `<out_dir>/scwm.ckpt`.
std::filesystem::path train(const DatasetManifest& manifest, const TrainingConfig& cfg,
                            const TrainOptions& options = {});

}  // namespace wgv::scwm
