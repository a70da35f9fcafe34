#include "tom/tom.hpp"

#include <cstring>

#include "common/error.hpp"
#include "nn/checkpoint.hpp"
#include "nn/loss_kernels.hpp"
#include "nn/ops.hpp"
#include "wgpgm/wgpgm.hpp"

namespace wgv::tom {

PreserveMask PreserveMask::from_agnostic(const ParsingMap& agnostic_parsing) {
  PreserveMask m;
  m.resolution = agnostic_parsing.resolution();
  const std::vector<std::uint8_t> labels = agnostic_parsing.labels();
  m.bits.resize(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) m.bits[i] = is_preserved(static_cast<Role>(labels[i])) ? 1 : 0;
  return m;
}

void LossWeights::validate() const {
  if (l1 < 0 || adv < 0 || fm < 0) fail(ErrorCode::NegativeWeight, "loss weights must be non-negative");
}

Model::Model(const TomSettings& settings, std::uint64_t seed) : settings_(settings), ready_(true) {
  Rng rng(mix_seed(seed, 0x746f6d));
  generator = nn::UNet(g_params, rng, "g", kInputChannels, 5, settings.widths);
  d = nn::PatchDiscriminator(d_params, rng, "d", kDiscriminatorChannels, settings.d_width);
}

nn::Var Model::synthesize(nn::Tape& t, nn::Var input) const {
  nn::Var raw = generator.forward(t, input);
  nn::Var base = nn::add_scalar(t, nn::scale(t, nn::tanh(t, nn::slice_channels(t, raw, 0, 3)), 0.5f), 0.5f);
  nn::Var masks = nn::sigmoid(t, nn::slice_channels(t, raw, 3, 5));
  return nn::concat_channels(t, {base, masks});
}

void pack_input(const ImageRGB& agnostic_image, const PoseMap& pose, const ParsingMap& parsing,
                const ImageRGB& warped_top, const ImageRGB& warped_bottom, float* dst) {
  const Resolution res = agnostic_image.resolution();
  if (pose.resolution != res || parsing.resolution() != res || warped_top.resolution() != res ||
      warped_bottom.resolution() != res)
    fail(ErrorCode::ShapeMismatch, "TOM inputs must share one resolution");
  const std::size_t P = res.pixels();
  auto put = [&](const float* src, std::size_t planes) {
    std::memcpy(dst, src, sizeof(float) * planes * P);
    dst += planes * P;
  };
  put(agnostic_image.data().data(), 3);
  put(pose.values.data(), kNumKeypoints);
  put(parsing.values().data(), kNumClasses);
  put(warped_top.data().data(), 3);
  put(warped_bottom.data().data(), 3);
}

TOMOutput forward(const Model& model, const ImageRGB& agnostic_image, const PoseMap& pose, const ParsingMap& parsing,
                  const ImageRGB& warped_top, const ImageRGB& warped_bottom) {
  if (!model.ready()) fail(ErrorCode::UninitializedModel, "TOM generator has no parameters loaded");
  const Resolution res = agnostic_image.resolution();
  nn::Tensor in(nn::Shape{1, kInputChannels, res.height, res.width});
  pack_input(agnostic_image, pose, parsing, warped_top, warped_bottom, in.data());
  nn::Tape t(false);
  const nn::Tensor y = model.synthesize(t, t.constant(std::move(in)))->value;
  const std::size_t P = res.pixels();
  TOMOutput out;
  out.base_image = ImageRGB(res);
  std::memcpy(out.base_image.data().data(), y.plane(0, 0), sizeof(float) * 3 * P);
  out.mask_top.assign(y.plane(0, 3), y.plane(0, 3) + P);
  out.mask_bottom.assign(y.plane(0, 4), y.plane(0, 4) + P);
  return out;
}

ImageRGB compose(const ImageRGB& agnostic_image, const PreserveMask& preserve, const TOMOutput& out,
                 const ImageRGB& warped_top, const ImageRGB& warped_bottom) {
  const Resolution res = agnostic_image.resolution();
  const std::size_t P = res.pixels();
  if (preserve.resolution != res || preserve.bits.size() != P || out.base_image.resolution() != res ||
      out.mask_top.size() != P || out.mask_bottom.size() != P || warped_top.resolution() != res ||
      warped_bottom.resolution() != res)
    fail(ErrorCode::ShapeMismatch, "composition inputs must share one resolution");
  ImageRGB result(res);
  for (int c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < P; ++i) {
      const std::size_t k = c * P + i;
      if (preserve.bits[i]) {
        result.data()[k] = agnostic_image.data()[k];
        continue;
      }
      const float mt = out.mask_top[i], mb = out.mask_bottom[i];
      const float lower = mb * warped_bottom.data()[k] + (1.0f - mb) * out.base_image.data()[k];
      result.data()[k] = mt * warped_top.data()[k] + (1.0f - mt) * lower;
    }
  }
  return result;
}

namespace {

// m * a + (1 - m) * b with m broadcast over channels.
nn::Var blend(nn::Tape& t, nn::Var m, nn::Var a, nn::Var b) {
  return nn::add(t, b, nn::mul_broadcast(t, m, nn::add(t, a, nn::scale(t, b, -1.0f))));
}

}  // namespace

nn::Var compose(nn::Tape& t, nn::Var agnostic_image, nn::Var preserve, nn::Var base, nn::Var mask_top,
                nn::Var mask_bottom, nn::Var warped_top, nn::Var warped_bottom) {
  nn::Var lower = blend(t, mask_bottom, warped_bottom, base);
  nn::Var upper = blend(t, mask_top, warped_top, lower);
  return blend(t, preserve, agnostic_image, upper);
}

TomLoss tom_loss(const ImageRGB& pred, const ImageRGB& target, std::span<const double> fake_scores,
                 const std::vector<std::vector<double>>& real_features,
                 const std::vector<std::vector<double>>& fake_features, const LossWeights& weights) {
  weights.validate();
  if (pred.resolution() != target.resolution())
    fail(ErrorCode::ShapeMismatch, "prediction " + pred.resolution().to_string() + " vs target " +
                                       target.resolution().to_string());
  const std::vector<double> a(pred.data().begin(), pred.data().end());
  const std::vector<double> b(target.data().begin(), target.data().end());
  TomLoss out;
  const double l1 = kernels::l1_mean<double>(a, b, {});
  const double adv = fake_scores.empty() ? 0.0 : kernels::lsgan_g<double>(fake_scores, {});
  const double fm = wgpgm::feature_matching_loss(real_features, fake_features);
  out.components = {{"l1", l1}, {"adv", adv}, {"fm", fm}};
  out.total = weights.l1 * l1 + weights.adv * adv + weights.fm * fm;
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
  Model m(cfg.tom, cfg.seed);
  c.get_params("g", m.g_params);
  c.get_params("d", m.d_params);
  return m;
}

}  // namespace wgv::tom
