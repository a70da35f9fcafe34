#include "wgpgm/wgpgm.hpp"

#include <cmath>
#include <cstring>

#include "common/error.hpp"
#include "nn/loss_kernels.hpp"

namespace wgv::wgpgm {

void LossWeights::validate() const {
  if (ce < 0 || adv < 0 || fm < 0 || wg < 0) fail(ErrorCode::NegativeWeight, "loss weights must be non-negative");
}

Model::Model(const WgpgmSettings& settings, std::uint64_t seed) : settings_(settings), ready_(true) {
  Rng rng(mix_seed(seed, 0x6770));
  generator = nn::UNet(g_params, rng, "g", kConditionChannels, kNumClasses, settings.widths);
  d = nn::PatchDiscriminator(d_params, rng, "d", kDiscriminatorChannels, settings.d_width);
  d_low = nn::PatchDiscriminator(d_params, rng, "d_low", kDiscriminatorChannels, settings.d_width);
}

void pack_condition(const ParsingMap& agnostic, const PoseMap& pose, const ImageRGB& top, const ImageRGB& bottom,
                    const WearingGuideMask& mask, float* dst) {
  const Resolution res = agnostic.resolution();
  if (pose.resolution != res || top.resolution() != res || bottom.resolution() != res || mask.resolution() != res)
    fail(ErrorCode::ShapeMismatch, "condition rasters must share one resolution");
  const std::size_t P = res.pixels();
  std::memcpy(dst, agnostic.values().data(), sizeof(float) * kNumClasses * P);
  dst += kNumClasses * P;
  std::memcpy(dst, pose.values.data(), sizeof(float) * kNumKeypoints * P);
  dst += kNumKeypoints * P;
  std::memcpy(dst, top.data().data(), sizeof(float) * 3 * P);
  dst += 3 * P;
  std::memcpy(dst, bottom.data().data(), sizeof(float) * 3 * P);
  dst += 3 * P;
  for (std::size_t i = 0; i < P; ++i) dst[i] = mask.bits()[i] ? 1.0f : 0.0f;
}

ParsingMap forward(const Model& model, const ParsingMap& agnostic, const PoseMap& pose, const ImageRGB& top,
                   const ImageRGB& bottom, const WearingGuideMask& mask) {
  if (!model.ready()) fail(ErrorCode::UninitializedModel, "WGPGM generator has no parameters loaded");
  const Resolution res = agnostic.resolution();
  if (auto err = validate_mask(mask, res)) fail(err->code, err->message);
  nn::Tensor cond(nn::Shape{1, kConditionChannels, res.height, res.width});
  pack_condition(agnostic, pose, top, bottom, mask, cond.data());
  nn::Tape t(false);
  nn::Var prob = nn::softmax_channels(t, model.generator.forward(t, t.constant(std::move(cond))));
  ParsingMap out(res, ParsingMode::Probability);
  out.values() = prob->value.vec();
  return out;
}

nn::Var lower_body_crop(nn::Tape& t, nn::Var x) {
  const int h = x->shape().h;
  if (h % 2 != 0) fail(ErrorCode::OddHeight, "lower-body crop needs an even height, got " + std::to_string(h));
  return nn::crop_rows(t, x, h / 2, h);
}

std::vector<float> lower_body_crop(std::span<const float> raster, int channels, Resolution res) {
  if (res.height % 2 != 0)
    fail(ErrorCode::OddHeight, "lower-body crop needs an even height, got " + std::to_string(res.height));
  if (raster.size() != static_cast<std::size_t>(channels) * res.pixels())
    fail(ErrorCode::ShapeMismatch, "raster size does not match its resolution");
  const int half = res.height / 2;
  std::vector<float> out(static_cast<std::size_t>(channels) * half * res.width);
  for (int c = 0; c < channels; ++c)
    std::memcpy(out.data() + static_cast<std::size_t>(c) * half * res.width,
                raster.data() + (static_cast<std::size_t>(c) * res.height + half) * res.width,
                sizeof(float) * half * res.width);
  return out;
}

AdvLosses adv_losses_lsgan(std::span<const double> real_scores, std::span<const double> fake_scores) {
  AdvLosses out;
  out.d_loss = kernels::lsgan_d<double>(real_scores, fake_scores, {}, {});
  out.g_loss = kernels::lsgan_g<double>(fake_scores, {});
  return out;
}

double feature_matching_loss(const std::vector<std::vector<double>>& real,
                             const std::vector<std::vector<double>>& fake,
                             std::vector<std::vector<double>>* grad_fake) {
  if (real.size() != fake.size())
    fail(ErrorCode::LayerCountMismatch, "feature lists have " + std::to_string(real.size()) + " and " +
                                            std::to_string(fake.size()) + " layers");
  if (fake.empty()) return 0.0;
  if (grad_fake) grad_fake->assign(fake.size(), {});
  const double inv_layers = 1.0 / static_cast<double>(fake.size());
  double total = 0.0;
  for (std::size_t l = 0; l < fake.size(); ++l) {
    std::vector<double> g;
    if (grad_fake) g.resize(fake[l].size());
    total += kernels::l1_mean<double>(fake[l], real[l], g);
    if (grad_fake) {
      for (auto& v : g) v *= inv_layers;
      (*grad_fake)[l] = std::move(g);
    }
  }
  return total * inv_layers;
}

std::vector<double> bottom_probability(const ParsingMap& pred) {
  const auto s = pred.slice_sum({Role::BottomHips, Role::BottomLegs});
  return {s.begin(), s.end()};
}

GeneratorLoss generator_loss(const ParsingMap& pred, const ParsingMap& target, const WearingGuideMask& mask,
                             double g_adv, double fm, const LossWeights& weights) {
  weights.validate();
  if (pred.resolution() != target.resolution() || mask.resolution() != pred.resolution())
    fail(ErrorCode::ShapeMismatch, "prediction, target and mask must share one resolution");
  const std::vector<double> p(pred.values().begin(), pred.values().end());
  const std::vector<double> q(target.values().begin(), target.values().end());
  GeneratorLoss out;
  const double ce = kernels::cross_entropy<double>(p, q, kNumClasses, {});
  const double wg = wearing_guide_loss(mask, bottom_probability(pred));
  out.components = {{"ce", ce}, {"adv", g_adv}, {"fm", fm}, {"wg", wg}};
  out.total = weights.ce * ce + weights.adv * g_adv + weights.fm * fm + weights.wg * wg;
  return out;
}

void save(const std::filesystem::path& path, const Model& model, const nn::Adam* g_opt, const nn::Adam* d_opt,
          const TrainingConfig& cfg, std::int64_t step) {
  nn::Checkpoint c;
  c.component = kComponent;
  c.schema_hash = LabelSchema::standard().hash();
  c.config = cfg.serialize_for_checkpoint();
  c.step = step;
  c.put_params("g", model.g_params);
  c.put_params("d", model.d_params);
  if (g_opt) g_opt->save(c, "adam_g");
  if (d_opt) d_opt->save(c, "adam_d");
  c.save(path);
}

Model load(const std::filesystem::path& path) {
  const nn::Checkpoint c = nn::Checkpoint::load(path, LabelSchema::standard().hash(), kComponent);
  const TrainingConfig cfg = TrainingConfig::parse(c.config);
  Model m(cfg.wgpgm, cfg.seed);
  c.get_params("g", m.g_params);
  c.get_params("d", m.d_params);
  return m;
}

}  // namespace wgv::wgpgm
