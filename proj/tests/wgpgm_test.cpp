#include <cmath>

#include "data/preprocess.hpp"
#include "nn/ops.hpp"
#include "support.hpp"
#include "wgpgm/wgpgm.hpp"

namespace wgv {
namespace {

struct Inputs {
  ParsingMap agnostic;
  PoseMap pose;
  ImageRGB top;
  ImageRGB bottom;
  WearingGuideMask mask;
};

Inputs random_inputs(Rng& rng, Resolution res) {
  std::vector<std::uint8_t> labels(res.pixels());
  for (auto& l : labels) l = rng.chance(0.7) ? 0 : index_of(Role::Face);
  PoseKeypoints kp;
  for (auto& p : kp.points) p = {rng.uniform_int(0, res.height - 1), rng.uniform_int(0, res.width - 1), true};
  return {ParsingMap::from_labels(res, labels), pose_to_heatmaps(kp, default_pose_sigma(res), res),
          test::random_image(rng, res), test::random_image(rng, res),
          HemMask{res, rng.uniform_int(0, res.height - 1)}.expand()};
}

WgpgmSettings small_settings() {
  WgpgmSettings s;
  s.widths = {8, 16, 16};
  s.d_width = 8;
  return s;
}

TEST(WgpgmForward, DeskShapeAndNormalization) {
  Rng rng(1);
  const Inputs in = random_inputs(rng, kDeskResolution);
  const wgpgm::Model model(WgpgmSettings{}, 3);
  const ParsingMap out = wgpgm::forward(model, in.agnostic, in.pose, in.top, in.bottom, in.mask);
  EXPECT_EQ(out.resolution(), kDeskResolution);
  EXPECT_EQ(out.mode(), ParsingMode::Probability);
  ASSERT_EQ(out.values().size(), 17u * 64 * 48);
  EXPECT_NO_THROW(out.validate(1e-5));
}

TEST(WgpgmForward, SoftmaxHoldsForRandomInputs) {
  Rng rng(2);
  const wgpgm::Model model(small_settings(), 4);
  for (int trial = 0; trial < 5; ++trial) {
    Inputs in = random_inputs(rng, {16, 12});
    for (auto& v : in.top.data()) v = static_cast<float>(rng.uniform(-50.0, 50.0));
    const ParsingMap out = wgpgm::forward(model, in.agnostic, in.pose, in.top, in.bottom, in.mask);
    for (int r = 0; r < 16; ++r)
      for (int c = 0; c < 12; ++c) {
        double s = 0;
        for (int k = 0; k < kNumClasses; ++k) {
          ASSERT_GE(out.at(k, r, c), 0.0f);
          s += out.at(k, r, c);
        }
        ASSERT_NEAR(s, 1.0, 1e-5);
      }
  }
}

TEST(WgpgmForward, DeterministicAndSeedDependent) {
  Rng rng(3);
  const Inputs in = random_inputs(rng, {16, 12});
  const wgpgm::Model a(small_settings(), 9), b(small_settings(), 9), c(small_settings(), 10);
  const ParsingMap pa = wgpgm::forward(a, in.agnostic, in.pose, in.top, in.bottom, in.mask);
  EXPECT_EQ(pa, wgpgm::forward(a, in.agnostic, in.pose, in.top, in.bottom, in.mask));
  EXPECT_EQ(pa, wgpgm::forward(b, in.agnostic, in.pose, in.top, in.bottom, in.mask));
  EXPECT_NE(pa, wgpgm::forward(c, in.agnostic, in.pose, in.top, in.bottom, in.mask));
}

TEST(WgpgmForward, MaskReachesOutput) {
  Rng rng(4);
  Inputs in = random_inputs(rng, {16, 12});
  const wgpgm::Model model(small_settings(), 5);
  const ParsingMap a = wgpgm::forward(model, in.agnostic, in.pose, in.top, in.bottom, HemMask{{16, 12}, 0}.expand());
  const ParsingMap b = wgpgm::forward(model, in.agnostic, in.pose, in.top, in.bottom, HemMask{{16, 12}, 15}.expand());
  EXPECT_NE(a, b);
}

TEST(WgpgmForward, Errors) {
  Rng rng(5);
  const Inputs in = random_inputs(rng, {16, 12});
  EXPECT_WGV_ERROR(wgpgm::forward(wgpgm::Model(), in.agnostic, in.pose, in.top, in.bottom, in.mask),
                   ErrorCode::UninitializedModel);
  const wgpgm::Model model(small_settings(), 5);
  EXPECT_WGV_ERROR(wgpgm::forward(model, in.agnostic, in.pose, ImageRGB({8, 6}), in.bottom, in.mask),
                   ErrorCode::ShapeMismatch);
  EXPECT_WGV_ERROR(wgpgm::forward(model, in.agnostic, in.pose, in.top, in.bottom, HemMask{{8, 6}, 2}.expand()),
                   ErrorCode::DimensionError);
}

TEST(LowerBodyCrop, DeskRaster) {
  Rng rng(6);
  const Resolution res{64, 48};
  std::vector<float> x(res.pixels());
  for (auto& v : x) v = static_cast<float>(rng.uniform());
  const auto y = wgpgm::lower_body_crop(x, 1, res);
  ASSERT_EQ(y.size(), 32u * 48);
  for (int r = 0; r < 32; ++r)
    for (int c = 0; c < 48; ++c) ASSERT_EQ(y[r * 48 + c], x[(r + 32) * 48 + c]);
  const auto z = wgpgm::lower_body_crop(std::vector<float>(res.pixels(), 0.0f), 1, res);
  for (float v : z) EXPECT_EQ(v, 0.0f);
}

TEST(LowerBodyCrop, CommutesWithChannelConcat) {
  Rng rng(7);
  const Resolution res{16, 12};
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<float> a(2 * res.pixels()), b(3 * res.pixels());
    for (auto& v : a) v = static_cast<float>(rng.normal());
    for (auto& v : b) v = static_cast<float>(rng.normal());
    std::vector<float> ab(a);
    ab.insert(ab.end(), b.begin(), b.end());
    auto ca = wgpgm::lower_body_crop(a, 2, res);
    const auto cb = wgpgm::lower_body_crop(b, 3, res);
    ca.insert(ca.end(), cb.begin(), cb.end());
    EXPECT_EQ(wgpgm::lower_body_crop(ab, 5, res), ca);
  }
}

TEST(LowerBodyCrop, TapeVersionMatchesRasterVersion) {
  Rng rng(8);
  const Resolution res{16, 12};
  nn::Tensor x(nn::Shape{1, wgpgm::kDiscriminatorChannels, 16, 12});
  for (auto& v : x.vec()) v = static_cast<float>(rng.normal());
  nn::Tape t(false);
  const nn::Var y = wgpgm::lower_body_crop(t, t.constant(x));
  EXPECT_EQ(y->shape(), (nn::Shape{1, wgpgm::kDiscriminatorChannels, 8, 12}));
  EXPECT_EQ(y->value.vec(), wgpgm::lower_body_crop(x.vec(), wgpgm::kDiscriminatorChannels, res));
}

TEST(LowerBodyCrop, OddHeight) {
  EXPECT_WGV_ERROR(wgpgm::lower_body_crop(std::vector<float>(15), 1, {5, 3}), ErrorCode::OddHeight);
  nn::Tape t(false);
  EXPECT_WGV_ERROR(wgpgm::lower_body_crop(t, t.constant(nn::Tensor(nn::Shape{1, 1, 5, 4}))), ErrorCode::OddHeight);
}

TEST(LsganLosses, ClosedForms) {
  const std::vector<double> ones(6, 1.0), zeros(6, 0.0);
  EXPECT_DOUBLE_EQ(wgpgm::adv_losses_lsgan(ones, zeros).d_loss, 0.0);
  EXPECT_DOUBLE_EQ(wgpgm::adv_losses_lsgan(zeros, zeros).d_loss, 0.5);
  EXPECT_DOUBLE_EQ(wgpgm::adv_losses_lsgan(zeros, ones).g_loss, 0.0);
  EXPECT_DOUBLE_EQ(wgpgm::adv_losses_lsgan(zeros, zeros).g_loss, 1.0);
  EXPECT_WGV_ERROR(wgpgm::adv_losses_lsgan({}, zeros), ErrorCode::EmptyScores);
  EXPECT_WGV_ERROR(wgpgm::adv_losses_lsgan(ones, {}), ErrorCode::EmptyScores);
}

TEST(LsganLosses, RandomScoresMatchDirectFormula) {
  Rng rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const auto r = test::random_vector(rng, 12, -1, 2);
    const auto f = test::random_vector(rng, 7, -1, 2);
    double sr = 0, sf = 0, sg = 0;
    for (double v : r) sr += (v - 1) * (v - 1) / r.size();
    for (double v : f) {
      sf += v * v / f.size();
      sg += (v - 1) * (v - 1) / f.size();
    }
    const auto l = wgpgm::adv_losses_lsgan(r, f);
    EXPECT_NEAR(l.d_loss, 0.5 * sr + 0.5 * sf, 1e-12);
    EXPECT_NEAR(l.g_loss, sg, 1e-12);
    EXPECT_GE(l.d_loss, 0.0);
  }
}

TEST(FeatureMatching, Examples) {
  Rng rng(10);
  const std::vector<std::vector<double>> a{test::random_vector(rng, 20), test::random_vector(rng, 8)};
  EXPECT_EQ(wgpgm::feature_matching_loss(a, a), 0.0);

  std::vector<double> base = test::random_vector(rng, 30);
  std::vector<double> shifted = base;
  for (auto& v : shifted) v += 0.37;
  EXPECT_NEAR(wgpgm::feature_matching_loss({base}, {shifted}), 0.37, 1e-12);

  std::vector<std::vector<double>> real, fake;
  for (int l = 0; l < 3; ++l) {
    const std::size_t n = 5 + 7 * l;
    real.push_back(test::random_vector(rng, n, -1, 1));
    fake.push_back(test::random_vector(rng, n, -1, 1));
  }
  double oracle = 0;
  for (int l = 0; l < 3; ++l) {
    double s = 0;
    for (std::size_t i = 0; i < real[l].size(); ++i) s += std::abs(real[l][i] - fake[l][i]);
    oracle += s / real[l].size();
  }
  EXPECT_NEAR(wgpgm::feature_matching_loss(real, fake), oracle / 3, 1e-7);

  real.pop_back();
  EXPECT_WGV_ERROR(wgpgm::feature_matching_loss(real, fake), ErrorCode::LayerCountMismatch);
}

TEST(FeatureMatching, GradientFlowsToFakeOnly) {
  nn::Tape t(true);
  nn::Var real = t.leaf(nn::Tensor(nn::Shape{1, 2, 2, 2}, 1.0f));
  nn::Var fake = t.leaf(nn::Tensor(nn::Shape{1, 2, 2, 2}, 0.0f));
  t.backward(nn::feature_matching(t, {fake}, {real}));
  EXPECT_TRUE(fake->has_grad());
  const bool real_untouched = !real->has_grad() || std::all_of(real->grad.vec().begin(), real->grad.vec().end(),
                                                                [](float g) { return g == 0.0f; });
  EXPECT_TRUE(real_untouched);
}

ParsingMap near_one_hot(const ParsingMap& target, double clip) {
  ParsingMap p(target.resolution(), ParsingMode::Probability);
  const auto labels = target.labels();
  const int P = target.resolution().pixels();
  for (int px = 0; px < P; ++px)
    for (int k = 0; k < kNumClasses; ++k)
      p.values()[k * P + px] = static_cast<float>(k == labels[px] ? clip : (1.0 - clip) / (kNumClasses - 1));
  return p;
}

TEST(GeneratorLoss, NearCertainPrediction) {
  Rng rng(11);
  const Resolution res{8, 6};
  std::vector<std::uint8_t> labels(res.pixels());
  for (auto& l : labels) l = static_cast<std::uint8_t>(rng.uniform_int(0, 16));
  labels[0] = index_of(Role::TopTorso);
  const ParsingMap target = ParsingMap::from_labels(res, labels);
  const ParsingMap pred = near_one_hot(target, 1.0 - 1e-6);
  const auto loss = wgpgm::generator_loss(pred, target, build_wearing_guide(target).expand(), 0, 0, {1, 0, 0, 0});
  const double expected = -std::log(static_cast<double>(static_cast<float>(1.0 - 1e-6)));
  EXPECT_NEAR(loss.total, expected, 1e-9);
  EXPECT_NEAR(loss.total, 1e-6, 1e-7);
}

TEST(GeneratorLoss, WearingGuideOnlyZeroWhenBottomAbsentInMask) {
  const Resolution res{8, 6};
  std::vector<std::uint8_t> labels(res.pixels(), 0);
  for (int c = 0; c < 6; ++c) {
    labels[2 * 6 + c] = index_of(Role::TopTorso);
    labels[6 * 6 + c] = index_of(Role::BottomLegs);
  }
  const ParsingMap target = ParsingMap::from_labels(res, labels);
  const auto loss =
      wgpgm::generator_loss(target, target, build_wearing_guide(target).expand(), 0.7, 0.3, {0, 0, 0, 1});
  EXPECT_EQ(loss.total, 0.0);
}

TEST(GeneratorLoss, TotalEqualsIndependentComponentSum) {
  Rng rng(12);
  const Resolution res{8, 6};
  for (int trial = 0; trial < 5; ++trial) {
    ParsingMap pred(res, ParsingMode::Probability);
    const int P = res.pixels();
    for (int px = 0; px < P; ++px) {
      double s = 0;
      std::vector<double> w(kNumClasses);
      for (auto& v : w) s += (v = rng.uniform(0.01, 1.0));
      for (int k = 0; k < kNumClasses; ++k) pred.values()[k * P + px] = static_cast<float>(w[k] / s);
    }
    std::vector<std::uint8_t> labels(P);
    for (auto& l : labels) l = static_cast<std::uint8_t>(rng.uniform_int(0, 16));
    const ParsingMap target = ParsingMap::from_labels(res, labels);
    const WearingGuideMask mask = HemMask{res, rng.uniform_int(0, 7)}.expand();
    const double adv = rng.uniform(), fm = rng.uniform();

    double ce = 0, wg = 0;
    for (int px = 0; px < P; ++px) {
      ce -= std::log(static_cast<double>(pred.values()[labels[px] * P + px]));
      const double bottom = static_cast<double>(pred.values()[index_of(Role::BottomHips) * P + px]) +
                            pred.values()[index_of(Role::BottomLegs) * P + px];
      wg += mask.bits()[px] * bottom;
    }
    ce /= P;
    wg /= P;
    const auto loss = wgpgm::generator_loss(pred, target, mask, adv, fm, {1, 1, 1, 1});
    EXPECT_NEAR(loss.total, ce + adv + fm + wg, 1e-6);
    EXPECT_NEAR(loss.components.at("ce"), ce, 1e-6);
    EXPECT_NEAR(loss.components.at("wg"), wg, 1e-6);
    for (const auto& [k, v] : loss.components) EXPECT_TRUE(std::isfinite(v) && v >= 0) << k;
  }
}

TEST(GeneratorLoss, Errors) {
  const ParsingMap a = ParsingMap::from_labels({8, 6}, std::vector<std::uint8_t>(48, index_of(Role::TopTorso)));
  const ParsingMap b = ParsingMap::from_labels({4, 3}, std::vector<std::uint8_t>(12, index_of(Role::TopTorso)));
  const WearingGuideMask m = HemMask{{8, 6}, 3}.expand();
  EXPECT_WGV_ERROR(wgpgm::generator_loss(a, b, m, 0, 0, {}), ErrorCode::ShapeMismatch);
  EXPECT_WGV_ERROR(wgpgm::generator_loss(a, a, m, 0, 0, {1, -1, 0, 0}), ErrorCode::NegativeWeight);
}

TEST(WgpgmCheckpoint, RoundTripAndSchemaRefusal) {
  test::TempDir d("wgckpt");
  TrainingConfig cfg;
  cfg.wgpgm = small_settings();
  cfg.seed = 21;
  const wgpgm::Model model(cfg.wgpgm, cfg.seed);
  wgpgm::save(d / "m.ckpt", model, nullptr, nullptr, cfg, 0);
  const wgpgm::Model back = wgpgm::load(d / "m.ckpt");
  Rng rng(13);
  const Inputs in = random_inputs(rng, {16, 12});
  EXPECT_EQ(wgpgm::forward(model, in.agnostic, in.pose, in.top, in.bottom, in.mask),
            wgpgm::forward(back, in.agnostic, in.pose, in.top, in.bottom, in.mask));

  nn::Checkpoint c = nn::Checkpoint::load(d / "m.ckpt", LabelSchema::standard().hash());
  c.schema_hash ^= 1;
  c.save(d / "bad.ckpt");
  EXPECT_WGV_ERROR(wgpgm::load(d / "bad.ckpt"), ErrorCode::SchemaMismatch);

  std::ofstream(d / "junk.ckpt") << "garbage";
  EXPECT_WGV_ERROR(wgpgm::load(d / "junk.ckpt"), ErrorCode::CorruptFile);
}

}  // namespace
}  // namespace wgv
