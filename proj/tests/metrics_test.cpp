#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "app/evaluate.hpp"
#include "data/loader.hpp"
#include "data/synthetic.hpp"
#include "metrics/metrics.hpp"
#include "support.hpp"

namespace wgv::metrics {
namespace {

// Direct windowed SSIM: for every valid window position, Gaussian-weighted
// moments are summed explicitly.
double brute_force_ssim(const ImageRGB& a, const ImageRGB& b) {
  const int R = kSsimWindow / 2;
  double w[kSsimWindow][kSsimWindow], wsum = 0;
  for (int i = 0; i < kSsimWindow; ++i)
    for (int j = 0; j < kSsimWindow; ++j) {
      w[i][j] = std::exp(-((i - R) * (i - R) + (j - R) * (j - R)) / (2 * kSsimSigma * kSsimSigma));
      wsum += w[i][j];
    }
  const double C1 = 0.01 * 0.01, C2 = 0.03 * 0.03;
  double total = 0;
  int count = 0;
  for (int ch = 0; ch < 3; ++ch)
    for (int r = R; r < a.height() - R; ++r)
      for (int c = R; c < a.width() - R; ++c) {
        double mx = 0, my = 0;
        for (int i = 0; i < kSsimWindow; ++i)
          for (int j = 0; j < kSsimWindow; ++j) {
            mx += w[i][j] / wsum * a.at(ch, r - R + i, c - R + j);
            my += w[i][j] / wsum * b.at(ch, r - R + i, c - R + j);
          }
        double vx = 0, vy = 0, cxy = 0;
        for (int i = 0; i < kSsimWindow; ++i)
          for (int j = 0; j < kSsimWindow; ++j) {
            const double dx = a.at(ch, r - R + i, c - R + j) - mx, dy = b.at(ch, r - R + i, c - R + j) - my;
            vx += w[i][j] / wsum * dx * dx;
            vy += w[i][j] / wsum * dy * dy;
            cxy += w[i][j] / wsum * dx * dy;
          }
        total += (2 * mx * my + C1) * (2 * cxy + C2) / ((mx * mx + my * my + C1) * (vx + vy + C2));
        ++count;
      }
  return total / count;
}

TEST(Ssim, IdentityIsOne) {
  Rng rng(1);
  const ImageRGB img = test::random_image(rng, {64, 48});
  EXPECT_NEAR(ssim(img, img), 1.0, 1e-9);
}

TEST(Ssim, BlackAgainstWhite) {
  const double C1 = 1e-4;
  EXPECT_NEAR(ssim(ImageRGB({64, 48}, 0.0f), ImageRGB({64, 48}, 1.0f)), C1 / (1.0 + C1), 1e-9);
}

TEST(Ssim, MatchesBruteForceWindows) {
  Rng rng(2);
  for (int trial = 0; trial < 3; ++trial) {
    const ImageRGB a = test::random_image(rng, {16, 12});
    ImageRGB b = a;
    for (auto& v : b.data()) v = std::clamp(v + static_cast<float>(rng.uniform(-0.2, 0.2)), 0.0f, 1.0f);
    EXPECT_NEAR(ssim(a, b), brute_force_ssim(a, b), 1e-6);
  }
}

TEST(Ssim, SymmetricAndBounded) {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const ImageRGB a = test::random_image(rng, {16, 12}), b = test::random_image(rng, {16, 12});
    const double ab = ssim(a, b);
    EXPECT_NEAR(ab, ssim(b, a), 1e-9);
    EXPECT_LE(ab, 1.0 + 1e-12);
    EXPECT_GE(ab, -1.0 - 1e-12);
  }
}

TEST(Ssim, Errors) {
  EXPECT_WGV_ERROR(ssim(ImageRGB({8, 6}), ImageRGB({8, 6})), ErrorCode::TooSmall);
  EXPECT_WGV_ERROR(ssim(ImageRGB({16, 12}), ImageRGB({20, 15})), ErrorCode::ShapeMismatch);
}

GaussianStats stats(Eigen::VectorXd mean, Eigen::MatrixXd cov) { return {std::move(mean), std::move(cov)}; }

TEST(Fid, AnalyticMeanShift) {
  const FidResult r = fid_from_stats(stats(Eigen::Vector2d(0, 0), Eigen::Matrix2d::Identity()),
                                     stats(Eigen::Vector2d(1, 0), Eigen::Matrix2d::Identity()));
  EXPECT_NEAR(r.value, 1.0, 1e-9);
  EXPECT_FALSE(r.degenerate);
}

TEST(Fid, AnalyticCovarianceScale) {
  const FidResult r = fid_from_stats(stats(Eigen::Vector2d(0, 0), Eigen::Matrix2d::Identity()),
                                     stats(Eigen::Vector2d(0, 0), 4.0 * Eigen::Matrix2d::Identity()));
  EXPECT_NEAR(r.value, 2.0, 1e-9);
}

TEST(Fid, NonCommutingCovariances) {
  Eigen::Matrix2d A, B;
  A << 2, 0.5, 0.5, 1;
  B << 1, -0.3, -0.3, 3;
  // tr(A) + tr(B) - 2 tr(sqrt(sqrt(A) B sqrt(A))) via an independent eigen route.
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> ea(A);
  const Eigen::Matrix2d sa = ea.eigenvectors() * ea.eigenvalues().cwiseSqrt().asDiagonal() * ea.eigenvectors().transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> em(sa * B * sa);
  const double want = A.trace() + B.trace() - 2 * em.eigenvalues().cwiseSqrt().sum();
  EXPECT_NEAR(fid_from_stats(stats(Eigen::Vector2d(0, 0), A), stats(Eigen::Vector2d(0, 0), B)).value, want, 1e-9);
}

std::vector<std::vector<double>> gaussian_cloud(Rng& rng, int n, const std::vector<double>& mean) {
  std::vector<std::vector<double>> out(n, std::vector<double>(mean.size()));
  for (auto& v : out)
    for (std::size_t d = 0; d < mean.size(); ++d) v[d] = mean[d] + rng.normal();
  return out;
}

TEST(Fid, EqualSetsGiveZero) {
  Rng rng(4);
  const auto a = gaussian_cloud(rng, 50, {0, 0, 0});
  EXPECT_LE(std::abs(fid(a, a).value), 1e-6);
}

TEST(Fid, LargeSamplesApproachPopulationValue) {
  Rng rng(5);
  const auto a = gaussian_cloud(rng, 10000, {0, 0, 0, 0});
  const auto b = gaussian_cloud(rng, 10000, {1, 0, 0, 0});
  EXPECT_NEAR(fid(a, b).value, 1.0, 0.05);
}

TEST(Fid, PermutationInvariantAndSymmetric) {
  Rng rng(6);
  auto a = gaussian_cloud(rng, 40, {0, 1, 0});
  const auto b = gaussian_cloud(rng, 30, {0.5, 0, 0});
  const double base = fid(a, b).value;
  std::reverse(a.begin(), a.end());
  std::swap(a[3], a[17]);
  EXPECT_NEAR(fid(a, b).value, base, 1e-9);
  EXPECT_NEAR(fid(b, a).value, base, 1e-9);
  EXPECT_GE(base, 0.0);
}

TEST(Fid, DegenerateCovarianceIsFlagged) {
  std::vector<std::vector<double>> flat{{0, 0}, {1, 0}, {2, 0}};
  std::vector<std::vector<double>> other{{0, 1}, {1, 2}, {2, 0}};
  const FidResult r = fid(flat, other);
  EXPECT_TRUE(std::isfinite(r.value));
  EXPECT_TRUE(r.degenerate);
}

TEST(Fid, Errors) {
  EXPECT_WGV_ERROR(fid({{0.0, 1.0}, {1.0}}, {{0.0, 1.0}, {1.0, 1.0}}), ErrorCode::DimensionMismatch);
  EXPECT_WGV_ERROR(fid({{0.0, 1.0}, {1.0, 2.0}}, {{0.0, 1.0, 2.0}, {1.0, 1.0, 2.0}}), ErrorCode::DimensionMismatch);
  EXPECT_WGV_ERROR(gaussian_stats({{1.0, 2.0}}), ErrorCode::InvalidArgument);
}

TEST(GaussianStats, MatchesHandComputation) {
  const GaussianStats s = gaussian_stats({{1, 2}, {3, 6}, {5, 4}});
  EXPECT_NEAR(s.mean(0), 3.0, 1e-12);
  EXPECT_NEAR(s.mean(1), 4.0, 1e-12);
  EXPECT_NEAR(s.cov(0, 0), 4.0, 1e-12);
  EXPECT_NEAR(s.cov(1, 1), 4.0, 1e-12);
  EXPECT_NEAR(s.cov(0, 1), 2.0, 1e-12);
}

// Raw pixels as a single feature layer.
class PixelEmbedder : public FeatureEmbedder {
 public:
  std::string id() const override { return "pixels"; }
  std::vector<LayerFeatures> layers(const ImageRGB& image) const override {
    LayerFeatures f{3, image.resolution().pixels(), {}};
    f.values.assign(image.data().begin(), image.data().end());
    return {f};
  }
  std::vector<double> embed(const ImageRGB& image) const override {
    return {image.data().begin(), image.data().end()};
  }
};

TEST(PerceptualDistance, HandComputedOnPixels) {
  ImageRGB a({4, 3}, 0.0f), b({4, 3}, 0.0f);
  // Every pixel of a points along red, b along green for half the pixels.
  for (int p = 0; p < 12; ++p) {
    a.data()[p] = 1.0f;
    if (p < 6) b.data()[12 + p] = 2.0f;
    else b.data()[p] = 3.0f;
  }
  // Orthogonal unit vectors differ by |e1 - e2|^2 = 2, parallel ones by 0.
  EXPECT_NEAR(perceptual_distance(a, b, PixelEmbedder{}), 1.0, 1e-9);
  EXPECT_NEAR(perceptual_distance(a, a, PixelEmbedder{}), 0.0, 1e-12);
}

TEST(PerceptualDistance, LayerAverage) {
  const LayerFeatures x{2, 1, {1, 0}}, y{2, 1, {0, 1}}, z{2, 1, {-1, 0}};
  EXPECT_NEAR(perceptual_distance({x, x}, {y, z}), (2.0 + 4.0) / 2, 1e-9);
  EXPECT_WGV_ERROR(perceptual_distance({x}, {x, x}), ErrorCode::ShapeMismatch);
}

TEST(PerceptualDistance, SymmetricNonNegative) {
  Rng rng(7);
  const RandomConvEmbedder emb(7, 16);
  for (int trial = 0; trial < 5; ++trial) {
    const ImageRGB a = test::random_image(rng, {16, 12}), b = test::random_image(rng, {16, 12});
    const double d = perceptual_distance(a, b, emb);
    EXPECT_NEAR(d, perceptual_distance(b, a, emb), 1e-12);
    EXPECT_GE(d, 0.0);
    EXPECT_NEAR(perceptual_distance(a, a, emb), 0.0, 1e-12);
  }
}

TEST(RandomConvEmbedder, DeterministicPerSeed) {
  Rng rng(8);
  const ImageRGB img = test::random_image(rng, {16, 12});
  EXPECT_EQ(RandomConvEmbedder(3, 16).embed(img), RandomConvEmbedder(3, 16).embed(img));
  EXPECT_NE(RandomConvEmbedder(3, 16).embed(img), RandomConvEmbedder(4, 16).embed(img));
  EXPECT_EQ(RandomConvEmbedder(3, 16).embed(img).size(), 16u);
  EXPECT_EQ(RandomConvEmbedder(3, 16).layers(img).size(), 3u);
}

std::vector<PairedImage> random_pairs(Rng& rng, int n) {
  std::vector<PairedImage> out;
  for (int i = 0; i < n; ++i) out.push_back({"p" + std::to_string(i), test::random_image(rng, {16, 12}),
                                             test::random_image(rng, {16, 12})});
  return out;
}

TEST(Score, ReportHasExactlyEightKeys) {
  Rng rng(9);
  const MetricsReport r = score(random_pairs(rng, 4), {test::random_image(rng, {16, 12}), test::random_image(rng, {16, 12})},
                                RandomConvEmbedder(7, 16));
  const nlohmann::json j = r.to_json();
  EXPECT_EQ(j.size(), 8u);
  for (const char* k : {"ssim_pair", "lpips_pair", "fid_pair", "fid_unpair", "n_pair", "n_unpair", "resolution",
                        "embedder"})
    EXPECT_TRUE(j.contains(k)) << k;
  EXPECT_EQ(j["n_pair"], 4);
  EXPECT_EQ(j["n_unpair"], 2);
  EXPECT_EQ(j["resolution"], "16x12");
}

TEST(Score, AggregatesAreMeansOfPerSample) {
  Rng rng(10);
  const auto pairs = random_pairs(rng, 5);
  const RandomConvEmbedder emb(7, 16);
  const MetricsReport r = score(pairs, {pairs[0].target, pairs[1].target}, emb);
  ASSERT_EQ(r.per_sample.size(), 5u);
  double s = 0, l = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    EXPECT_EQ(r.per_sample[i].id, pairs[i].id);
    EXPECT_NEAR(r.per_sample[i].ssim, ssim(pairs[i].prediction, pairs[i].target), 1e-12);
    s += r.per_sample[i].ssim;
    l += r.per_sample[i].lpips;
  }
  EXPECT_NEAR(r.ssim_pair, s / 5, 1e-12);
  EXPECT_NEAR(r.lpips_pair, l / 5, 1e-12);
}

TEST(Score, ThreadCountDoesNotChangeResults) {
  Rng rng(11);
  const auto pairs = random_pairs(rng, 7);
  std::vector<ImageRGB> unpaired;
  for (int i = 0; i < 5; ++i) unpaired.push_back(test::random_image(rng, {16, 12}));
  const RandomConvEmbedder emb(7, 16);
  const MetricsReport serial = score(pairs, unpaired, emb, 1);
  const MetricsReport parallel = score(pairs, unpaired, emb, 4);
  EXPECT_EQ(serial.to_json(), parallel.to_json());
}

TEST(Score, CsvAndDiagnostics) {
  Rng rng(12);
  test::TempDir d("score");
  const auto pairs = random_pairs(rng, 3);
  const MetricsReport r = score(pairs, {pairs[0].target, pairs[1].target}, RandomConvEmbedder(7, 16));
  r.write_csv(d / "per_sample.csv");
  const auto bytes = test::slurp(d / "per_sample.csv");
  const std::string text(bytes.begin(), bytes.end());
  EXPECT_EQ(text.rfind("id,ssim,lpips\n", 0), 0u);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);
  EXPECT_TRUE(r.diagnostics().is_object());
}

TEST(EvaluateSplit, IdentityScoresArePerfect) {
  test::TempDir d("identity");
  const DatasetManifest pair = synth::gen_synthetic_dataset(6, kDeskResolution, 21, d / "pair", Split::TestPair);
  const DatasetManifest unpair = make_unpaired_split(pair, 5);
  const MetricsReport r = evaluate_split(nullptr, pair, unpair, RandomConvEmbedder(), EvalOptions{1, true});
  EXPECT_EQ(r.n_pair, 6);
  EXPECT_NEAR(r.ssim_pair, 1.0, 1e-6);
  EXPECT_NEAR(r.lpips_pair, 0.0, 1e-6);
  EXPECT_NEAR(r.fid_pair, 0.0, 1e-6);
  EXPECT_TRUE(std::isfinite(r.fid_unpair));
  EXPECT_TRUE(r.failures.empty());
}

TEST(Report, TableHasHeaderAndOneRow) {
  MetricsReport r;
  r.resolution = {64, 48};
  r.ssim_pair = 0.5;
  r.lpips_pair = 0.25;
  r.fid_pair = 3.0;
  r.fid_unpair = 4.5;
  const std::string t = r.table();
  ASSERT_EQ(std::count(t.begin(), t.end(), '\n'), 2);
  const std::string header = t.substr(0, t.find('\n')), row = t.substr(t.find('\n') + 1);
  EXPECT_NE(header.find("SSIM"), std::string::npos);
  EXPECT_NE(header.find("T_unpair"), std::string::npos);
  EXPECT_EQ(row.rfind("64x48", 0), 0u);
  for (const char* v : {"0.5000", "0.2500", "3.0000", "4.5000"}) EXPECT_NE(row.find(v), std::string::npos) << v;
}

}  // namespace
}  // namespace wgv::metrics
