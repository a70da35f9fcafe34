#include "scwm/scwm.hpp"

#include <cmath>
#include <cstring>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "nn/checkpoint.hpp"
#include "nn/loss_kernels.hpp"
#include "nn/ops.hpp"
#include "scwm/warp_ops.hpp"

namespace wgv::scwm {

std::vector<double> correlation_match(const FeatureMap& a, const FeatureMap& b) {
  if (a.channels != b.channels)
    fail(ErrorCode::ChannelMismatch, "feature maps have " + std::to_string(a.channels) + " and " +
                                         std::to_string(b.channels) + " channels");
  if (a.values.size() != static_cast<std::size_t>(a.channels) * a.positions ||
      b.values.size() != static_cast<std::size_t>(b.channels) * b.positions)
    fail(ErrorCode::ShapeMismatch, "feature map size does not match channels x positions");
  std::vector<double> volume(static_cast<std::size_t>(a.positions) * b.positions, 0.0);
  for (int c = 0; c < a.channels; ++c) {
    const double* pa = a.values.data() + static_cast<std::size_t>(c) * a.positions;
    const double* pb = b.values.data() + static_cast<std::size_t>(c) * b.positions;
    for (int i = 0; i < a.positions; ++i)
      for (int j = 0; j < b.positions; ++j) volume[static_cast<std::size_t>(i) * b.positions + j] += pa[i] * pb[j];
  }
  return volume;
}

namespace {

constexpr int kHeadWidth0 = 64;
constexpr int kHeadWidth1 = 32;
// Keeps the initial warp close to the identity.
constexpr float kThetaGain = 0.05f;

std::vector<nn::ConvBlock> make_encoder(nn::ParameterStore& store, Rng& rng, const std::string& prefix, int in,
                                        const std::vector<int>& widths) {
  std::vector<nn::ConvBlock> enc;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    enc.push_back(nn::ConvBlock::make(store, rng, prefix + "." + std::to_string(i), in, widths[i], 4, 2, 1, true,
                                      nn::Act::LeakyRelu));
    in = widths[i];
  }
  return enc;
}

RegressionHead make_head(nn::ParameterStore& store, Rng& rng, const std::string& prefix, int positions,
                         int controls) {
  RegressionHead h;
  h.conv0 = nn::ConvBlock::make(store, rng, prefix + ".0", positions, kHeadWidth0, 3, 1, 1, true, nn::Act::Relu);
  h.conv1 = nn::ConvBlock::make(store, rng, prefix + ".1", kHeadWidth0, kHeadWidth1, 3, 1, 1, true, nn::Act::Relu);
  h.fc = nn::Linear::make(store, rng, prefix + ".fc", kHeadWidth1 * positions, 2 * controls, kThetaGain);
  return h;
}

void check_sample_inputs(const Model& model, std::span<const float> top_slice, std::span<const float> bottom_slice,
                         const PoseMap& pose, const GarmentRecord& top, const GarmentRecord& bottom) {
  if (!model.ready()) fail(ErrorCode::UninitializedModel, "SCWM model has no parameters loaded");
  const Resolution res = model.resolution();
  const std::size_t P = res.pixels();
  if (top_slice.size() != P || bottom_slice.size() != P)
    fail(ErrorCode::ShapeMismatch, "parsing slices do not match the model resolution " + res.to_string());
  if (pose.resolution != res || pose.values.size() != kNumKeypoints * P)
    fail(ErrorCode::ShapeMismatch, "pose map does not match the model resolution " + res.to_string());
  if (top.image.resolution() != res || bottom.image.resolution() != res)
    fail(ErrorCode::ShapeMismatch, "garment images do not match the model resolution " + res.to_string());
}

TPSParams to_params(const nn::Tensor& theta) {
  TPSParams p;
  p.values.assign(theta.vec().begin(), theta.vec().end());
  return p;
}

double masked_l1_term(const float* a, const float* b, const std::vector<float>& region, int channels) {
  const std::size_t P = region.size();
  std::vector<double> da(a, a + channels * P), db(b, b + channels * P), r(region.begin(), region.end());
  return kernels::masked_l1<double>(da, db, r, channels, {});
}

}  // namespace

Model::Model(const ScwmSettings& settings, Resolution res, std::uint64_t seed)
    : settings_(settings), res_(res), grid_{settings.grid_rows, settings.grid_cols} {
  res.validate();
  if (settings.widths.empty()) fail(ErrorCode::InvalidConfig, "SCWM needs at least one encoder level");
  const int levels = static_cast<int>(settings.widths.size());
  const int m = 1 << levels;
  if (res.height % m != 0 || res.width % m != 0)
    fail(ErrorCode::InvalidConfig, "resolution " + res.to_string() + " is not divisible by " + std::to_string(m));
  basis_ = std::make_shared<const TpsBasis>(grid_, res);
  const int positions = (res.height / m) * (res.width / m);
  Rng rng(mix_seed(seed, 0x7363));
  model_enc_ = make_encoder(params, rng, "model", kModelChannels, settings.widths);
  garment_enc_ = make_encoder(params, rng, "garment", 3, settings.widths);
  head_top_ = make_head(params, rng, "head_top", positions, grid_.size());
  head_bt_ = make_head(params, rng, "head_bt", positions, grid_.size());
  ready_ = true;
}

nn::Var Model::encode(nn::Tape& t, const std::vector<nn::ConvBlock>& enc, nn::Var x) const {
  for (const auto& block : enc) x = block(t, x);
  return nn::l2_normalize_channels(t, x);
}

nn::Var Model::encode_garment(nn::Tape& t, nn::Var image) const { return encode(t, garment_enc_, image); }

nn::Var Model::regress(nn::Tape& t, const RegressionHead& head, nn::Var features, nn::Var garment) const {
  nn::Var corr = nn::correlation(t, features, garment);
  return head.fc(t, head.conv1(t, head.conv0(t, corr)));
}

std::pair<nn::Var, nn::Var> Model::predict(nn::Tape& t, nn::Var model_in, nn::Var top_image,
                                           nn::Var bottom_image) const {
  if (!ready_) fail(ErrorCode::UninitializedModel, "SCWM model has no parameters loaded");
  nn::Var features = encode(t, model_enc_, model_in);
  nn::Var top = encode_garment(t, top_image);
  nn::Var bottom = encode_garment(t, bottom_image);
  return {regress(t, head_top_, features, top), regress(t, head_bt_, features, bottom)};
}

Thetas forward(const Model& model, std::span<const float> top_slice, std::span<const float> bottom_slice,
               const PoseMap& pose, const GarmentRecord& top, const GarmentRecord& bottom) {
  check_sample_inputs(model, top_slice, bottom_slice, pose, top, bottom);
  const Resolution res = model.resolution();
  const std::size_t P = res.pixels();
  nn::Tensor in(nn::Shape{1, kModelChannels, res.height, res.width});
  std::memcpy(in.plane(0, 0), top_slice.data(), sizeof(float) * P);
  std::memcpy(in.plane(0, 1), bottom_slice.data(), sizeof(float) * P);
  std::memcpy(in.plane(0, 2), pose.values.data(), sizeof(float) * kNumKeypoints * P);
  const nn::Shape img{1, 3, res.height, res.width};
  nn::Tape t(false);
  const auto [th_top, th_bt] = model.predict(t, t.constant(std::move(in)), t.constant(nn::Tensor(img, top.image.data())),
                                             t.constant(nn::Tensor(img, bottom.image.data())));
  return {to_params(th_top->value), to_params(th_bt->value)};
}

Thetas forward(const Model& model, const ParsingMap& parsing, const PoseMap& pose, const GarmentRecord& top,
               const GarmentRecord& bottom) {
  if (parsing.resolution() != model.resolution())
    fail(ErrorCode::ShapeMismatch, "parsing map does not match the model resolution");
  const std::vector<float> ts = parsing.slice_sum({Role::TopTorso, Role::TopSleeves});
  const std::vector<float> bs = parsing.slice_sum({Role::BottomHips, Role::BottomLegs});
  return forward(model, ts, bs, pose, top, bottom);
}

std::vector<float> WarpedGarment::mask() const {
  const std::size_t P = image.resolution().pixels();
  std::vector<float> m(P);
  for (std::size_t i = 0; i < P; ++i) m[i] = seg[P + i] + seg[2 * P + i];
  return m;
}

ImageRGB WarpedGarment::layer() const {
  const std::vector<float> m = mask();
  ImageRGB out = image;
  const std::size_t P = m.size();
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < P; ++i) out.data()[c * P + i] *= m[i];
  return out;
}

WarpedGarment apply_warp(const GarmentRecord& garment, const SamplingGrid& grid) {
  WarpedGarment w;
  w.image = warp(garment.image, grid);
  const std::vector<float> seg = garment.seg_one_hot();
  const std::vector<double> out = warp(std::vector<double>(seg.begin(), seg.end()), 3, garment.image.resolution(), grid);
  w.seg.assign(out.begin(), out.end());
  return w;
}

WornTarget worn_target(const SampleRecord& sample, GarmentKind kind) {
  const Resolution res = sample.resolution();
  const std::size_t P = res.pixels();
  const Role main = kind == GarmentKind::Top ? Role::TopTorso : Role::BottomHips;
  const Role secondary = kind == GarmentKind::Top ? Role::TopSleeves : Role::BottomLegs;
  WornTarget t;
  t.color = sample.model_image;
  t.seg.assign(3 * P, 0.0f);
  t.region.assign(P, 0.0f);
  const std::vector<std::uint8_t> labels = sample.parsing.labels();
  double area = 0.0;
  for (std::size_t i = 0; i < P; ++i) {
    const Role r = static_cast<Role>(labels[i]);
    const int part = r == main ? 1 : (r == secondary ? 2 : 0);
    t.seg[part * P + i] = 1.0f;
    if (part != 0) {
      t.region[i] = 1.0f;
      area += 1.0;
    }
  }
  t.present = area > 0.0 && (kind == GarmentKind::Top || sample.bottom.has_value());
  return t;
}

WarpLoss scwm_loss(const ImageRGB& top_img, const std::vector<float>& top_seg, const ImageRGB& bt_img,
                   const std::vector<float>& bt_seg, const SampleRecord& target) {
  const Resolution res = target.resolution();
  const std::size_t P = res.pixels();
  if (top_img.resolution() != res || bt_img.resolution() != res || top_seg.size() != 3 * P || bt_seg.size() != 3 * P)
    fail(ErrorCode::ShapeMismatch, "warped garments do not match the target resolution " + res.to_string());
  WarpLoss loss;
  const WornTarget top = worn_target(target, GarmentKind::Top);
  if (!top.present) fail(ErrorCode::EmptyTargetRegion, "sample " + target.id + " shows no top garment");
  loss.components["color_top"] = masked_l1_term(top_img.data().data(), top.color.data().data(), top.region, 3);
  loss.components["seg_top"] = masked_l1_term(top_seg.data(), top.seg.data(), top.region, 3);
  loss.total = loss.components["color_top"] + loss.components["seg_top"];
  const WornTarget bt = worn_target(target, GarmentKind::Bottom);
  loss.components["bottom_present"] = bt.present ? 1.0 : 0.0;
  if (bt.present) {
    loss.components["color_bottom"] = masked_l1_term(bt_img.data().data(), bt.color.data().data(), bt.region, 3);
    loss.components["seg_bottom"] = masked_l1_term(bt_seg.data(), bt.seg.data(), bt.region, 3);
    loss.total += loss.components["color_bottom"] + loss.components["seg_bottom"];
  }
  return loss;
}

void save(const std::filesystem::path& path, const Model& model, const nn::Adam* opt, const TrainingConfig& cfg,
          std::int64_t step) {
  nn::Checkpoint c;
  c.component = kComponent;
  c.schema_hash = LabelSchema::standard().hash();
  c.config = cfg.serialize_for_checkpoint();
  c.step = step;
  c.put_params("net", model.params);
  if (opt) opt->save(c, "adam");
  c.save(path);
}

Model load(const std::filesystem::path& path) {
  const nn::Checkpoint c = nn::Checkpoint::load(path, LabelSchema::standard().hash(), kComponent);
  const TrainingConfig cfg = TrainingConfig::parse(c.config);
  Model m(cfg.scwm, cfg.resolution, cfg.seed);
  c.get_params("net", m.params);
  return m;
}

}  // namespace wgv::scwm
