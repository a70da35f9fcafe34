#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "app/config.hpp"
#include "app/training.hpp"
#include "data/manifest.hpp"
#include "data/types.hpp"
#include "guide/wearing_guide.hpp"
#include "nn/adam.hpp"
#include "nn/checkpoint.hpp"
#include "nn/layers.hpp"

namespace wgv::wgpgm {

// Agnostic parsing (17) + pose (17) + top (3) + bottom (3) + guide mask (1).
inline constexpr int kConditionChannels = 2 * kNumClasses + 3 + 3 + 1;
// Discriminators see the condition stack plus a parsing map.
inline constexpr int kDiscriminatorChannels = kConditionChannels + kNumClasses;
inline constexpr const char* kComponent = "wgpgm";

struct LossWeights {
  double ce = 10.0;
  double adv = 1.0;
  double fm = 10.0;
  double wg = 10.0;

  static LossWeights from(const WgpgmSettings& s) { return {s.lambda_ce, s.lambda_adv, s.lambda_fm, s.lambda_wg}; }
  // Throws NegativeWeight.
  void validate() const;
};

// Generator plus the full-body and lower-body discriminators.
class Model {
 public:
  Model() = default;
  Model(const WgpgmSettings& settings, std::uint64_t seed);

  bool ready() const noexcept { return ready_; }
  const WgpgmSettings& settings() const noexcept { return settings_; }

  nn::ParameterStore g_params;
  nn::ParameterStore d_params;
  nn::UNet generator;
  nn::PatchDiscriminator d;
  nn::PatchDiscriminator d_low;

 private:
  WgpgmSettings settings_;
  bool ready_ = false;
};

// Writes the condition channels of one sample (planar, kConditionChannels x H x W).
void pack_condition(const ParsingMap& agnostic, const PoseMap& pose, const ImageRGB& top, const ImageRGB& bottom,
                    const WearingGuideMask& mask, float* dst);

// Probability parsing map. Throws ShapeMismatch, UninitializedModel, or the
// mask's DimensionError / NonBinaryError.
ParsingMap forward(const Model& model, const ParsingMap& agnostic, const PoseMap& pose, const ImageRGB& top,
                   const ImageRGB& bottom, const WearingGuideMask& mask);

// Rows H/2..H-1 of a batch; throws OddHeight.
nn::Var lower_body_crop(nn::Tape& t, nn::Var x);
// Same crop on a planar single-sample raster with `channels` planes.
std::vector<float> lower_body_crop(std::span<const float> raster, int channels, Resolution res);

struct AdvLosses {
  double d_loss = 0.0;
  double g_loss = 0.0;
};
// LSGAN objectives for one discriminator; throws EmptyScores.
AdvLosses adv_losses_lsgan(std::span<const double> real_scores, std::span<const double> fake_scores);

// Mean over layers of mean |fake - real|. When `grad_fake` is given it
// receives d(loss)/d(fake). Throws LayerCountMismatch / ShapeMismatch.
double feature_matching_loss(const std::vector<std::vector<double>>& real,
                             const std::vector<std::vector<double>>& fake,
                             std::vector<std::vector<double>>* grad_fake = nullptr);

struct GeneratorLoss {
  double total = 0.0;
  std::map<std::string, double> components;  // ce, adv, fm, wg
};

// Weighted generator objective from a predicted map, its target, the guide
// mask and precomputed adversarial / feature-matching terms.
GeneratorLoss generator_loss(const ParsingMap& pred, const ParsingMap& target, const WearingGuideMask& mask,
                             double g_adv, double fm, const LossWeights& weights);

// Per-pixel probability that a pixel belongs to a bottom garment.
std::vector<double> bottom_probability(const ParsingMap& pred);

void save(const std::filesystem::path& path, const Model& model, const nn::Adam* g_opt, const nn::Adam* d_opt,
          const TrainingConfig& cfg, std::int64_t step);
// Rebuilds the architecture from the embedded config.
Model load(const std::filesystem::path& path);

// Trains on a train-split manifest and returns the final checkpoint path
// (`<cfg.out_dir>/wgpgm.ckpt`). Loss curve: `<out_dir>/wgpgm_loss.csv`.
std::filesystem::path train(const DatasetManifest& manifest, const TrainingConfig& cfg,
                            const TrainOptions& options = {});

}  // namespace wgv::wgpgm
