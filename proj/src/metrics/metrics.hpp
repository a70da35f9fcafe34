#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "common/raster.hpp"

namespace wgv::metrics {

// Mean local SSIM (11x11 Gaussian window, sigma 1.5, K1 0.01, K2 0.03, L 1)
// over valid window positions, averaged over channels. Throws ShapeMismatch
// and TooSmall.
double ssim(const ImageRGB& a, const ImageRGB& b);

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;

struct GaussianStats {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};
// Sample mean and unbiased covariance. Throws InvalidArgument below two
// vectors, DimensionMismatch on ragged input.
GaussianStats gaussian_stats(const std::vector<std::vector<double>>& feats);

struct FidResult {
  double value = 0.0;
  // A covariance was (numerically) singular; the value is still reported.
  bool degenerate = false;
};
FidResult fid_from_stats(const GaussianStats& a, const GaussianStats& b);
FidResult fid(const std::vector<std::vector<double>>& feats_a, const std::vector<std::vector<double>>& feats_b);

// Per-layer feature map: planar channels x positions.
struct LayerFeatures {
  int channels = 0;
  int positions = 0;
  std::vector<double> values;
};

class FeatureEmbedder {
 public:
  virtual ~FeatureEmbedder() = default;
  virtual std::string id() const = 0;
  virtual std::vector<LayerFeatures> layers(const ImageRGB& image) const = 0;
  virtual std::vector<double> embed(const ImageRGB& image) const = 0;
};

// Fixed random three-layer conv net (3x3, stride 2, ReLU). The embedding is
// the spatial mean of the last layer.
class RandomConvEmbedder : public FeatureEmbedder {
 public:
  explicit RandomConvEmbedder(std::uint64_t seed = 7, int dim = 64);

  std::string id() const override;
  std::vector<LayerFeatures> layers(const ImageRGB& image) const override;
  std::vector<double> embed(const ImageRGB& image) const override;

 private:
  struct ConvLayer {
    int cin = 0;
    int cout = 0;
    std::vector<double> weight;  // cout x cin x 3 x 3
    std::vector<double> bias;
  };
  std::uint64_t seed_;
  int dim_;
  std::vector<ConvLayer> layers_;
};

// Mean over layers of the per-position squared distance between
// unit-normalized feature vectors. Throws ShapeMismatch.
double perceptual_distance(const ImageRGB& a, const ImageRGB& b, const FeatureEmbedder& embedder);
double perceptual_distance(const std::vector<LayerFeatures>& a, const std::vector<LayerFeatures>& b);

struct SampleScore {
  std::string id;
  double ssim = 0.0;
  double lpips = 0.0;
};

struct SampleFailure {
  std::string id;
  std::string split;
  std::string code;
  std::string message;
};

struct MetricsReport {
  double ssim_pair = 0.0;
  double lpips_pair = 0.0;
  double fid_pair = 0.0;
  double fid_unpair = 0.0;
  int n_pair = 0;
  int n_unpair = 0;
  Resolution resolution{};
  std::string embedder;

  // Kept out of the report JSON.
  std::vector<SampleScore> per_sample;
  std::vector<SampleFailure> failures;
  bool fid_pair_degenerate = false;
  bool fid_unpair_degenerate = false;

  nlohmann::json to_json() const;
  void write(const std::filesystem::path& file) const;
  // id,ssim,lpips
  void write_csv(const std::filesystem::path& file) const;
  // Header and one row: resolution, SSIM, LPIPS, paired and unpaired FID.
  std::string table() const;
  // Failed samples and FID warnings.
  nlohmann::json diagnostics() const;
};

struct PairedImage {
  std::string id;
  ImageRGB prediction;
  ImageRGB target;
};

// Scores paired predictions against their targets and the unpaired
// predictions against the paired targets' distribution. Scores are computed
// on `threads` workers and aggregated in input order.
MetricsReport score(const std::vector<PairedImage>& paired, const std::vector<ImageRGB>& unpaired,
                    const FeatureEmbedder& embedder, int threads = 1);

}  // namespace wgv::metrics
