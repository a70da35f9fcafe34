#include "metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>

#include <Eigen/Eigenvalues>

#include "common/error.hpp"
#include "common/rng.hpp"

namespace wgv::metrics {
namespace {

std::vector<double> gaussian_window() {
  std::vector<double> g(kSsimWindow);
  const int half = kSsimWindow / 2;
  double sum = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - half;
    g[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
    sum += g[i];
  }
  for (auto& v : g) v /= sum;
  std::vector<double> w(kSsimWindow * kSsimWindow);
  for (int i = 0; i < kSsimWindow; ++i)
    for (int j = 0; j < kSsimWindow; ++j) w[i * kSsimWindow + j] = g[i] * g[j];
  return w;
}

}  // namespace

double ssim(const ImageRGB& a, const ImageRGB& b) {
  if (a.resolution() != b.resolution())
    fail(ErrorCode::ShapeMismatch, "SSIM inputs differ: " + a.resolution().to_string() + " vs " +
                                       b.resolution().to_string());
  const int H = a.height(), W = a.width();
  if (H < kSsimWindow || W < kSsimWindow)
    fail(ErrorCode::TooSmall, "image " + a.resolution().to_string() + " is smaller than the 11x11 SSIM window");
  static const std::vector<double> win = gaussian_window();
  constexpr double C1 = 0.01 * 0.01, C2 = 0.03 * 0.03;
  const int rows = H - kSsimWindow + 1, cols = W - kSsimWindow + 1;
  double total = 0.0;
  for (int c = 0; c < 3; ++c) {
    double channel = 0.0;
    for (int r = 0; r < rows; ++r) {
      for (int q = 0; q < cols; ++q) {
        double mx = 0, my = 0, xx = 0, yy = 0, xy = 0;
        for (int i = 0; i < kSsimWindow; ++i) {
          for (int j = 0; j < kSsimWindow; ++j) {
            const double w = win[i * kSsimWindow + j];
            const double x = a.at(c, r + i, q + j), y = b.at(c, r + i, q + j);
            mx += w * x;
            my += w * y;
            xx += w * x * x;
            yy += w * y * y;
            xy += w * x * y;
          }
        }
        const double vx = xx - mx * mx, vy = yy - my * my, cxy = xy - mx * my;
        channel += ((2 * mx * my + C1) * (2 * cxy + C2)) / ((mx * mx + my * my + C1) * (vx + vy + C2));
      }
    }
    total += channel / (static_cast<double>(rows) * cols);
  }
  return total / 3.0;
}

GaussianStats gaussian_stats(const std::vector<std::vector<double>>& feats) {
  if (feats.size() < 2) fail(ErrorCode::InvalidArgument, "statistics need at least two feature vectors");
  const std::size_t d = feats.front().size();
  for (const auto& f : feats)
    if (f.size() != d) fail(ErrorCode::DimensionMismatch, "feature vectors have differing lengths");
  const auto n = static_cast<Eigen::Index>(feats.size());
  Eigen::MatrixXd X(n, static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < n; ++i)
    X.row(i) = Eigen::Map<const Eigen::RowVectorXd>(feats[i].data(), static_cast<Eigen::Index>(d));
  GaussianStats s;
  s.mean = X.colwise().mean().transpose();
  const Eigen::MatrixXd centered = X.rowwise() - s.mean.transpose();
  s.cov = centered.transpose() * centered / static_cast<double>(n - 1);
  return s;
}

FidResult fid_from_stats(const GaussianStats& a, const GaussianStats& b) {
  const auto d = a.mean.size();
  if (b.mean.size() != d || a.cov.rows() != d || a.cov.cols() != d || b.cov.rows() != d || b.cov.cols() != d)
    fail(ErrorCode::DimensionMismatch, "statistics have differing dimensionality");
  FidResult out;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ea(0.5 * (a.cov + a.cov.transpose()));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eb(0.5 * (b.cov + b.cov.transpose()));
  auto degenerate = [](const Eigen::VectorXd& ev) {
    const double top = std::max(1.0, ev.cwiseAbs().maxCoeff());
    return ev.minCoeff() <= 1e-10 * top;
  };
  out.degenerate = degenerate(ea.eigenvalues()) || degenerate(eb.eigenvalues());
  const Eigen::VectorXd sa = ea.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Eigen::MatrixXd sqrt_a = ea.eigenvectors() * sa.asDiagonal() * ea.eigenvectors().transpose();
  // sqrt(A) B sqrt(A) is symmetric and shares its spectrum with A B.
  Eigen::MatrixXd m = sqrt_a * b.cov * sqrt_a;
  m = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> em(m, Eigen::EigenvaluesOnly);
  const double tr_sqrt = em.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double value = (a.mean - b.mean).squaredNorm() + a.cov.trace() + b.cov.trace() - 2.0 * tr_sqrt;
  out.value = std::max(0.0, value);
  return out;
}

FidResult fid(const std::vector<std::vector<double>>& feats_a, const std::vector<std::vector<double>>& feats_b) {
  if (!feats_a.empty() && !feats_b.empty() && feats_a.front().size() != feats_b.front().size())
    fail(ErrorCode::DimensionMismatch, "feature sets have differing dimensionality");
  return fid_from_stats(gaussian_stats(feats_a), gaussian_stats(feats_b));
}

RandomConvEmbedder::RandomConvEmbedder(std::uint64_t seed, int dim) : seed_(seed), dim_(dim) {
  if (dim <= 0) fail(ErrorCode::InvalidArgument, "embedding dimension must be positive");
  Rng rng(mix_seed(seed, 0x656d62));
  const int widths[] = {3, 16, 32, dim};
  for (int l = 0; l < 3; ++l) {
    ConvLayer c;
    c.cin = widths[l];
    c.cout = widths[l + 1];
    const double std = std::sqrt(2.0 / (c.cin * 9));
    c.weight.resize(static_cast<std::size_t>(c.cout) * c.cin * 9);
    for (auto& w : c.weight) w = std * rng.normal();
    c.bias.assign(c.cout, 0.0);
    layers_.push_back(std::move(c));
  }
}

std::string RandomConvEmbedder::id() const {
  return "randconv-s" + std::to_string(seed_) + "-d" + std::to_string(dim_);
}

std::vector<LayerFeatures> RandomConvEmbedder::layers(const ImageRGB& image) const {
  int H = image.height(), W = image.width();
  std::vector<double> x(image.data().size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = 2.0 * image.data()[i] - 1.0;
  std::vector<LayerFeatures> out;
  for (const ConvLayer& c : layers_) {
    const int Ho = (H - 1) / 2 + 1, Wo = (W - 1) / 2 + 1;
    std::vector<double> y(static_cast<std::size_t>(c.cout) * Ho * Wo);
    for (int o = 0; o < c.cout; ++o) {
      for (int r = 0; r < Ho; ++r) {
        for (int q = 0; q < Wo; ++q) {
          double s = c.bias[o];
          for (int i = 0; i < c.cin; ++i) {
            const double* w = c.weight.data() + (static_cast<std::size_t>(o) * c.cin + i) * 9;
            for (int dr = 0; dr < 3; ++dr) {
              const int rr = 2 * r + dr - 1;
              if (rr < 0 || rr >= H) continue;
              for (int dq = 0; dq < 3; ++dq) {
                const int qq = 2 * q + dq - 1;
                if (qq < 0 || qq >= W) continue;
                s += w[dr * 3 + dq] * x[(static_cast<std::size_t>(i) * H + rr) * W + qq];
              }
            }
          }
          y[(static_cast<std::size_t>(o) * Ho + r) * Wo + q] = std::max(0.0, s);
        }
      }
    }
    out.push_back({c.cout, Ho * Wo, y});
    x = std::move(y);
    H = Ho;
    W = Wo;
  }
  return out;
}

std::vector<double> RandomConvEmbedder::embed(const ImageRGB& image) const {
  const LayerFeatures last = layers(image).back();
  std::vector<double> v(last.channels, 0.0);
  for (int c = 0; c < last.channels; ++c) {
    for (int p = 0; p < last.positions; ++p) v[c] += last.values[static_cast<std::size_t>(c) * last.positions + p];
    v[c] /= last.positions;
  }
  return v;
}

double perceptual_distance(const std::vector<LayerFeatures>& a, const std::vector<LayerFeatures>& b) {
  if (a.size() != b.size()) fail(ErrorCode::ShapeMismatch, "feature stacks have differing layer counts");
  if (a.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t l = 0; l < a.size(); ++l) {
    const LayerFeatures& fa = a[l];
    const LayerFeatures& fb = b[l];
    if (fa.channels != fb.channels || fa.positions != fb.positions || fa.values.size() != fb.values.size())
      fail(ErrorCode::ShapeMismatch, "feature layer " + std::to_string(l) + " differs in shape");
    double layer = 0.0;
    for (int p = 0; p < fa.positions; ++p) {
      double na = 0.0, nb = 0.0;
      for (int c = 0; c < fa.channels; ++c) {
        const double va = fa.values[static_cast<std::size_t>(c) * fa.positions + p];
        const double vb = fb.values[static_cast<std::size_t>(c) * fb.positions + p];
        na += va * va;
        nb += vb * vb;
      }
      na = std::sqrt(na) + 1e-10;
      nb = std::sqrt(nb) + 1e-10;
      double d = 0.0;
      for (int c = 0; c < fa.channels; ++c) {
        const double diff = fa.values[static_cast<std::size_t>(c) * fa.positions + p] / na -
                            fb.values[static_cast<std::size_t>(c) * fb.positions + p] / nb;
        d += diff * diff;
      }
      layer += d;
    }
    total += layer / fa.positions;
  }
  return total / static_cast<double>(a.size());
}

double perceptual_distance(const ImageRGB& a, const ImageRGB& b, const FeatureEmbedder& embedder) {
  if (a.resolution() != b.resolution())
    fail(ErrorCode::ShapeMismatch, "perceptual distance inputs differ: " + a.resolution().to_string() + " vs " +
                                       b.resolution().to_string());
  return perceptual_distance(embedder.layers(a), embedder.layers(b));
}

nlohmann::json MetricsReport::to_json() const {
  return {{"ssim_pair", ssim_pair}, {"lpips_pair", lpips_pair}, {"fid_pair", fid_pair},
          {"fid_unpair", fid_unpair}, {"n_pair", n_pair},       {"n_unpair", n_unpair},
          {"resolution", resolution.to_string()}, {"embedder", embedder}};
}

void MetricsReport::write(const std::filesystem::path& file) const {
  std::ofstream out(file);
  if (!out) fail(ErrorCode::IoError, "cannot write '" + file.string() + "'");
  out << to_json().dump(2) << "\n";
}

void MetricsReport::write_csv(const std::filesystem::path& file) const {
  std::ofstream out(file);
  if (!out) fail(ErrorCode::IoError, "cannot write '" + file.string() + "'");
  out << "id,ssim,lpips\n";
  char buf[64];
  for (const auto& s : per_sample) {
    std::snprintf(buf, sizeof buf, "%.9g,%.9g", s.ssim, s.lpips);
    out << s.id << "," << buf << "\n";
  }
}

std::string MetricsReport::table() const {
  char row[160];
  std::snprintf(row, sizeof row, "%-10s | %14.4f | %15.4f | %13.4f | %15.4f\n", resolution.to_string().c_str(), ssim_pair,
                lpips_pair, fid_pair, fid_unpair);
  return std::string("resolution | SSIM\u2191 (T_pair) | LPIPS\u2193 (T_pair) | FID\u2193 (T_pair) | FID\u2193 (T_unpair)\n") + row;
}

nlohmann::json MetricsReport::diagnostics() const {
  nlohmann::json failed = nlohmann::json::array();
  for (const auto& f : failures)
    failed.push_back({{"id", f.id}, {"split", f.split}, {"code", f.code}, {"message", f.message}});
  return {{"failed", failed},
          {"n_failed", failures.size()},
          {"fid_pair_degenerate", fid_pair_degenerate},
          {"fid_unpair_degenerate", fid_unpair_degenerate}};
}

namespace {

// Runs job(i) for i in [0, n) on `threads` workers.
template <class F>
void parallel_for(std::size_t n, int threads, F job) {
  const std::size_t workers = std::clamp<std::size_t>(threads < 1 ? 1 : threads, 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) job(i);
    });
  for (auto& t : pool) t.join();
}

}  // namespace

MetricsReport score(const std::vector<PairedImage>& paired, const std::vector<ImageRGB>& unpaired,
                    const FeatureEmbedder& embedder, int threads) {
  if (paired.size() < 2 || unpaired.size() < 2)
    fail(ErrorCode::TooFewSamples, "scoring needs at least two paired and two unpaired images");
  MetricsReport r;
  r.resolution = paired.front().target.resolution();
  r.embedder = embedder.id();
  r.n_pair = static_cast<int>(paired.size());
  r.n_unpair = static_cast<int>(unpaired.size());
  r.per_sample.resize(paired.size());
  std::vector<std::vector<double>> pred_emb(paired.size()), target_emb(paired.size()), unpair_emb(unpaired.size());
  parallel_for(paired.size(), threads, [&](std::size_t i) {
    const PairedImage& p = paired[i];
    const auto la = embedder.layers(p.prediction);
    const auto lb = embedder.layers(p.target);
    r.per_sample[i] = {p.id, ssim(p.prediction, p.target), perceptual_distance(la, lb)};
    pred_emb[i] = embedder.embed(p.prediction);
    target_emb[i] = embedder.embed(p.target);
  });
  parallel_for(unpaired.size(), threads, [&](std::size_t i) { unpair_emb[i] = embedder.embed(unpaired[i]); });
  for (const auto& s : r.per_sample) {
    r.ssim_pair += s.ssim;
    r.lpips_pair += s.lpips;
  }
  r.ssim_pair /= r.n_pair;
  r.lpips_pair /= r.n_pair;
  const GaussianStats real = gaussian_stats(target_emb);
  const FidResult fp = fid_from_stats(gaussian_stats(pred_emb), real);
  const FidResult fu = fid_from_stats(gaussian_stats(unpair_emb), real);
  r.fid_pair = fp.value;
  r.fid_pair_degenerate = fp.degenerate;
  r.fid_unpair = fu.value;
  r.fid_unpair_degenerate = fu.degenerate;
  return r;
}

}  // namespace wgv::metrics
