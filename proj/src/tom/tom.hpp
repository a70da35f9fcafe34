#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "app/config.hpp"
#include "app/training.hpp"
#include "data/manifest.hpp"
#include "data/types.hpp"
#include "nn/adam.hpp"
#include "nn/layers.hpp"

namespace wgv::tom {

// Agnostic image (3) + pose (17) + parsing (17) + warped top (3) + warped bottom (3).
inline constexpr int kInputChannels = 3 + kNumKeypoints + kNumClasses + 3 + 3;
// The discriminator sees the input stack plus an image.
inline constexpr int kDiscriminatorChannels = kInputChannels + 3;
inline constexpr const char* kComponent = "tom";

struct TOMOutput {
  ImageRGB base_image;
  std::vector<float> mask_top;
  std::vector<float> mask_bottom;
};

// 1 exactly where the agnostic parsing keeps hair, face, hands or feet.
struct PreserveMask {
  Resolution resolution{};
  std::vector<std::uint8_t> bits;

  static PreserveMask from_agnostic(const ParsingMap& agnostic_parsing);
};

struct LossWeights {
  double l1 = 10.0;
  double adv = 1.0;
  double fm = 10.0;

  static LossWeights from(const TomSettings& s) { return {s.lambda_l1, s.lambda_adv, s.lambda_fm}; }
  // Throws NegativeWeight.
  void validate() const;
};

class Model {
 public:
  Model() = default;
  Model(const TomSettings& settings, std::uint64_t seed);

  bool ready() const noexcept { return ready_; }
  const TomSettings& settings() const noexcept { return settings_; }

  // Raw generator output mapped to base image [0,1] (3) and two masks (1 each).
  nn::Var synthesize(nn::Tape& t, nn::Var input) const;

  nn::ParameterStore g_params;
  nn::ParameterStore d_params;
  nn::UNet generator;
  nn::PatchDiscriminator d;

 private:
  TomSettings settings_;
  bool ready_ = false;
};

// Planar kInputChannels x H x W input stack of one sample.
void pack_input(const ImageRGB& agnostic_image, const PoseMap& pose, const ParsingMap& parsing,
                const ImageRGB& warped_top, const ImageRGB& warped_bottom, float* dst);

// Throws ShapeMismatch / UninitializedModel.
TOMOutput forward(const Model& model, const ImageRGB& agnostic_image, const PoseMap& pose, const ParsingMap& parsing,
                  const ImageRGB& warped_top, const ImageRGB& warped_bottom);

// Bottom over base, top over that, preserved pixels over everything.
// Throws ShapeMismatch.
ImageRGB compose(const ImageRGB& agnostic_image, const PreserveMask& preserve, const TOMOutput& out,
                 const ImageRGB& warped_top, const ImageRGB& warped_bottom);
// The same composition on a batch: images (N,3,H,W), masks (N,1,H,W).
nn::Var compose(nn::Tape& t, nn::Var agnostic_image, nn::Var preserve, nn::Var base, nn::Var mask_top,
                nn::Var mask_bottom, nn::Var warped_top, nn::Var warped_bottom);

struct TomLoss {
  double total = 0.0;
  std::map<std::string, double> components;  // l1, adv, fm
};
// l1 * mean|pred - target| + adv * LSGAN(fake scores) + fm * feature matching.
// Throws ShapeMismatch / NegativeWeight / LayerCountMismatch.
TomLoss tom_loss(const ImageRGB& pred, const ImageRGB& target, std::span<const double> fake_scores,
                 const std::vector<std::vector<double>>& real_features,
                 const std::vector<std::vector<double>>& fake_features, const LossWeights& weights);

void save(const std::filesystem::path& path, const Model& model, const nn::Adam* g_opt, const nn::Adam* d_opt,
          const TrainingConfig& cfg, std::int64_t step);
Model load(const std::filesystem::path& path);

// Loss curve: `<out_dir>/tom_loss.csv`; final checkpoint `<out_dir>/tom.ckpt`.
std::filesystem::path train(const DatasetManifest& manifest, const TrainingConfig& cfg,
                            const TrainOptions& options = {});

}  // namespace wgv::tom
