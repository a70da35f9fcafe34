#include <algorithm>

#include "guide/wearing_guide.hpp"
#include "support.hpp"

namespace wgv {
namespace {

ParsingMap torso_rows(Resolution res, int first, int last) {
  std::vector<std::uint8_t> labels(res.pixels(), 0);
  for (int r = first; r <= last; ++r)
    for (int c = 0; c < res.width; ++c) labels[r * res.width + c] = index_of(Role::TopTorso);
  return ParsingMap::from_labels(res, labels);
}

WearingGuideMask random_mask(Rng& rng, Resolution res, double p = 0.5) {
  std::vector<std::uint8_t> bits(res.pixels());
  for (auto& b : bits) b = rng.chance(p);
  return {res, bits};
}

TEST(BuildWearingGuide, TorsoRowsTwoToFive) {
  const HemMask hem = build_wearing_guide(torso_rows({8, 4}, 2, 5));
  EXPECT_EQ(hem.hem_row, 5);
  const WearingGuideMask m = hem.expand();
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 4; ++c) EXPECT_EQ(m.at(r, c), r <= 5 ? 1 : 0) << r << "," << c;
}

TEST(BuildWearingGuide, TorsoInLastRowGivesAllOnes) {
  std::vector<std::uint8_t> labels(8 * 6, 0);
  labels[7 * 6 + 3] = index_of(Role::TopTorso);
  const WearingGuideMask m = build_wearing_guide(ParsingMap::from_labels({8, 6}, labels)).expand();
  for (auto b : m.bits()) EXPECT_EQ(b, 1);
}

TEST(BuildWearingGuide, NoTorsoIsMissingTorso) {
  std::vector<std::uint8_t> labels(8 * 6, index_of(Role::TopSleeves));
  EXPECT_WGV_ERROR(build_wearing_guide(ParsingMap::from_labels({8, 6}, labels)), ErrorCode::MissingTorso);
}

TEST(BuildWearingGuide, AlwaysMonotoneRows) {
  Rng rng(12);
  const Resolution res{16, 12};
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::uint8_t> labels(res.pixels());
    for (auto& l : labels) l = static_cast<std::uint8_t>(rng.uniform_int(0, 16));
    labels[rng.uniform_int(0, res.pixels() - 1)] = index_of(Role::TopTorso);
    const WearingGuideMask m = build_wearing_guide(ParsingMap::from_labels(res, labels)).expand();
    bool seen_zero_row = false;
    for (int r = 0; r < res.height; ++r) {
      const bool ones = std::all_of(m.bits().begin() + r * res.width, m.bits().begin() + (r + 1) * res.width,
                                    [](auto b) { return b == 1; });
      const bool zeros = std::all_of(m.bits().begin() + r * res.width, m.bits().begin() + (r + 1) * res.width,
                                     [](auto b) { return b == 0; });
      ASSERT_TRUE(ones || zeros);
      if (zeros) seen_zero_row = true;
      ASSERT_FALSE(ones && seen_zero_row);
    }
    ASSERT_TRUE(m.hem_row().has_value());
  }
}

TEST(ShiftHem, TwentyPixelsUpAtFullResolution) {
  EXPECT_EQ(shift_hem({{256, 192}, 130}, -20).hem_row, 110);
  EXPECT_EQ(shift_hem({{256, 192}, 130}, 20).hem_row, 150);
}

TEST(ShiftHem, ZeroIsIdentityAndClamps) {
  const HemMask m{{8, 6}, 5};
  EXPECT_EQ(shift_hem(m, 0), m);
  EXPECT_EQ(shift_hem(m, 20).hem_row, 7);
  EXPECT_EQ(shift_hem(m, -20).hem_row, 0);
}

TEST(ShiftHem, MonotonePixelwise) {
  Rng rng(5);
  const Resolution res{64, 48};
  for (int trial = 0; trial < 40; ++trial) {
    const HemMask m{res, rng.uniform_int(0, 63)};
    const int delta = rng.uniform_int(-70, 70);
    const auto base = m.expand().bits();
    const auto moved = shift_hem(m, delta).expand().bits();
    for (std::size_t i = 0; i < base.size(); ++i) {
      if (delta >= 0) ASSERT_GE(moved[i], base[i]);
      if (delta <= 0) ASSERT_LE(moved[i], base[i]);
    }
  }
}

TEST(WearingGuideLoss, ZeroInsideMask) {
  const WearingGuideMask m = HemMask{{4, 3}, 1}.expand();
  std::vector<double> p(12, 0.0);
  for (int i = 6; i < 12; ++i) p[i] = 0.9;
  EXPECT_EQ(wearing_guide_loss(m, p), 0.0);
}

TEST(WearingGuideLoss, ConstantHalfOnTwoByTwo) {
  const WearingGuideMask m({2, 2}, {1, 1, 1, 1});
  const std::vector<double> p(4, 0.5);
  EXPECT_DOUBLE_EQ(wearing_guide_loss(m, p), 0.5);
}

TEST(WearingGuideLoss, MatchesBruteForce) {
  Rng rng(6);
  const Resolution res{16, 12};
  for (int trial = 0; trial < 10; ++trial) {
    const WearingGuideMask m = random_mask(rng, res);
    const auto p = test::random_vector(rng, res.pixels());
    double sum = 0;
    for (int r = 0; r < res.height; ++r)
      for (int c = 0; c < res.width; ++c) sum += m.at(r, c) * p[r * res.width + c];
    EXPECT_NEAR(wearing_guide_loss(m, p), sum / (res.height * res.width), 1e-7);
  }
}

TEST(WearingGuideLoss, ShapeMismatch) {
  const WearingGuideMask m = HemMask{{4, 3}, 1}.expand();
  EXPECT_WGV_ERROR(wearing_guide_loss(m, std::vector<double>(11, 0.0)), ErrorCode::ShapeMismatch);
}

TEST(WearingGuideLoss, ZeroIffVanishesOnMask) {
  Rng rng(7);
  const Resolution res{8, 6};
  for (int trial = 0; trial < 30; ++trial) {
    const WearingGuideMask m = random_mask(rng, res);
    auto p = test::random_vector(rng, res.pixels());
    for (std::size_t i = 0; i < p.size(); ++i)
      if (m.bits()[i] && rng.chance(0.7)) p[i] = 0.0;
    bool vanishes = true;
    for (std::size_t i = 0; i < p.size(); ++i) vanishes &= !(m.bits()[i] && p[i] != 0.0);
    EXPECT_EQ(std::abs(wearing_guide_loss(m, p)) <= 1e-7, vanishes);
  }
}

TEST(WearingGuideLoss, MonotoneInMask) {
  Rng rng(8);
  const Resolution res{8, 6};
  for (int trial = 0; trial < 30; ++trial) {
    const WearingGuideMask big = random_mask(rng, res, 0.7);
    std::vector<std::uint8_t> sub = big.bits();
    for (auto& b : sub)
      if (rng.chance(0.4)) b = 0;
    const auto p = test::random_vector(rng, res.pixels());
    EXPECT_LE(wearing_guide_loss({res, sub}, p), wearing_guide_loss(big, p));
    EXPECT_GE(wearing_guide_loss({res, sub}, p), 0.0);
  }
}

TEST(WearingGuideLoss, GradientMatchesFiniteDifferences) {
  Rng rng(9);
  const Resolution res{8, 6};
  for (int point = 0; point < 10; ++point) {
    const WearingGuideMask m = random_mask(rng, res);
    const auto p = test::random_vector(rng, res.pixels(), 0.05, 0.95);
    std::vector<double> grad(p.size());
    wearing_guide_loss(m, p, grad);
    const auto numeric = test::numeric_gradient([&](const std::vector<double>& x) { return wearing_guide_loss(m, x); }, p);
    EXPECT_LT(test::relative_error(grad, numeric), 1e-4);
    for (std::size_t i = 0; i < p.size(); ++i) EXPECT_DOUBLE_EQ(grad[i], m.bits()[i] / 48.0);
  }
}

TEST(ValidateMask, Cases) {
  const Resolution work{64, 48};
  EXPECT_FALSE(validate_mask(HemMask{work, 30}.expand(), work));
  const auto small = validate_mask(HemMask{{32, 24}, 10}.expand(), work);
  ASSERT_TRUE(small);
  EXPECT_EQ(small->code, ErrorCode::DimensionError);
  std::vector<std::uint8_t> checker(work.pixels());
  for (int r = 0; r < 64; ++r)
    for (int c = 0; c < 48; ++c) checker[r * 48 + c] = (r + c) % 2;
  EXPECT_FALSE(validate_mask({work, checker}, work));
  checker[5] = 2;
  const auto nb = validate_mask({work, checker}, work);
  ASSERT_TRUE(nb);
  EXPECT_EQ(nb->code, ErrorCode::NonBinaryError);
}

TEST(MaskWire, RleOfConstantBitmaps) {
  EXPECT_EQ(rle_runs(std::vector<std::uint8_t>(16, 0)), (std::vector<int>{16}));
  EXPECT_EQ(rle_runs(std::vector<std::uint8_t>(16, 1)), (std::vector<int>{0, 16}));
  EXPECT_EQ(rle_runs({0, 0, 1, 1, 1, 0}), (std::vector<int>{2, 3, 1}));
}

TEST(MaskWire, RandomRoundTrips) {
  Rng rng(10);
  const Resolution res{64, 48};
  for (int trial = 0; trial < 100; ++trial) {
    const WearingGuideMask m = random_mask(rng, res, rng.uniform(0.05, 0.95));
    const nlohmann::json wire = encode_rle(m);
    EXPECT_EQ(wire["type"], "rle");
    EXPECT_EQ(decode_mask(nlohmann::json::parse(wire.dump()), res), m);
  }
}

TEST(MaskWire, HemAndBitmapForms) {
  const Resolution res{64, 48};
  const HemMask hem{res, 20};
  EXPECT_EQ(encode_hem(hem), nlohmann::json::parse(R"({"type":"hem","hem_row":20})"));
  EXPECT_EQ(decode_mask(encode_hem(hem), res), hem.expand());
  EXPECT_EQ(decode_mask(encode_hem(hem), res).hem_row(), 20);

  nlohmann::json bitmap = {{"type", "bitmap"}, {"height", 64}, {"width", 48}};
  bitmap["bits"] = hem.expand().bits();
  EXPECT_EQ(decode_mask(bitmap, res), hem.expand());
  bitmap["bits"][3] = 2;
  EXPECT_WGV_ERROR(decode_mask(bitmap, res), ErrorCode::NonBinaryError);
}

TEST(MaskWire, DecodeErrors) {
  const Resolution res{64, 48};
  EXPECT_WGV_ERROR(decode_mask(encode_rle(HemMask{{32, 24}, 3}.expand()), res), ErrorCode::DimensionError);
  EXPECT_WGV_ERROR(decode_mask(nlohmann::json::parse(R"({"type":"hem","hem_row":64})"), res),
                   ErrorCode::DimensionError);
  EXPECT_WGV_ERROR(decode_mask(nlohmann::json::parse(R"({"type":"rle","height":64,"width":48,"runs":[5]})"), res),
                   ErrorCode::DimensionError);
  EXPECT_WGV_ERROR(decode_mask(nlohmann::json::parse(R"({"type":"blob"})"), res), ErrorCode::InvalidArgument);
  EXPECT_WGV_ERROR(decode_mask(nlohmann::json::parse(R"({"hem_row":3})"), res), ErrorCode::InvalidArgument);
}

TEST(HemMask, ExpandAndDetect) {
  const WearingGuideMask m = HemMask{{8, 6}, 0}.expand();
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 6; ++c) EXPECT_EQ(m.at(r, c), r == 0);
  EXPECT_EQ(m.hem_row(), 0);
  std::vector<std::uint8_t> bits = m.bits();
  bits[20] = 1;
  EXPECT_FALSE(WearingGuideMask({8, 6}, bits).hem_row());
}

}  // namespace
}  // namespace wgv
