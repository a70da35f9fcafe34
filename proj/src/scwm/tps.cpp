#include "scwm/tps.hpp"

#include <Eigen/LU>

namespace wgv::scwm {

double pixel_to_norm(double index, int extent) { return extent > 1 ? -1.0 + 2.0 * index / (extent - 1) : 0.0; }
double norm_to_pixel(double coord, int extent) { return (coord + 1.0) * 0.5 * (extent - 1); }

std::vector<Point2> ControlGrid::rest() const {
  if (rows < 2 || cols < 2) fail(ErrorCode::InvalidArgument, "control grid needs at least 2x2 points");
  std::vector<Point2> pts;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) pts.push_back({-1.0 + 2.0 * c / (cols - 1), -1.0 + 2.0 * r / (rows - 1)});
  return pts;
}

TpsBasis::TpsBasis(const std::vector<Point2>& controls, Resolution out) : res_(out), rest_(controls) {
  if (out.height <= 0 || out.width <= 0)
    fail(ErrorCode::InvalidResolution, "sampling grid needs a positive size, got " + out.to_string());
  const int n = static_cast<int>(controls.size());
  if (n < 3) fail(ErrorCode::SingularSystem, "TPS needs at least 3 control points");
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n + 3, n + 3);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double dx = controls[i].x - controls[j].x, dy = controls[i].y - controls[j].y;
      L(i, j) = tps_kernel(dx * dx + dy * dy);
    }
    L(i, n) = 1.0;
    L(i, n + 1) = controls[i].x;
    L(i, n + 2) = controls[i].y;
    L(n, i) = 1.0;
    L(n + 1, i) = controls[i].x;
    L(n + 2, i) = controls[i].y;
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(L);
  if (lu.rank() < n + 3) fail(ErrorCode::SingularSystem, "control points are degenerate (collinear or repeated)");
  // Columns of L^-1 that multiply the control targets.
  const Eigen::MatrixXd rhs = Eigen::MatrixXd::Identity(n + 3, n);
  const Eigen::MatrixXd coef = lu.solve(rhs);  // (n+3) x n

  const int P = out.pixels();
  Eigen::MatrixXd B(P, n + 3);
  for (int r = 0; r < out.height; ++r) {
    for (int c = 0; c < out.width; ++c) {
      const int p = r * out.width + c;
      const double x = pixel_to_norm(c, out.width), y = pixel_to_norm(r, out.height);
      for (int k = 0; k < n; ++k) {
        const double dx = x - controls[k].x, dy = y - controls[k].y;
        B(p, k) = tps_kernel(dx * dx + dy * dy);
      }
      B(p, n) = 1.0;
      B(p, n + 1) = x;
      B(p, n + 2) = y;
    }
  }
  m_ = B * coef;
  mf_ = m_.cast<float>();
}

SamplingGrid TpsBasis::apply(const TPSParams& theta) const {
  const int n = controls();
  if (static_cast<int>(theta.values.size()) != 2 * n)
    fail(ErrorCode::ShapeMismatch, "TPS parameters hold " + std::to_string(theta.values.size()) + " values, expected " +
                                       std::to_string(2 * n));
  Eigen::VectorXd tx(n), ty(n);
  for (int k = 0; k < n; ++k) {
    if (!std::isfinite(theta.values[2 * k]) || !std::isfinite(theta.values[2 * k + 1]))
      fail(ErrorCode::InvalidArgument, "TPS parameters must be finite");
    tx(k) = rest_[k].x + theta.values[2 * k];
    ty(k) = rest_[k].y + theta.values[2 * k + 1];
  }
  SamplingGrid g;
  g.resolution = res_;
  const Eigen::VectorXd gx = m_ * tx, gy = m_ * ty;
  g.x.assign(gx.data(), gx.data() + gx.size());
  g.y.assign(gy.data(), gy.data() + gy.size());
  return g;
}

SamplingGrid tps_grid(const TPSParams& theta, const ControlGrid& grid, Resolution out) {
  return TpsBasis(grid, out).apply(theta);
}

SamplingGrid tps_grid(const std::vector<Point2>& controls, const std::vector<Point2>& targets, Resolution out) {
  if (controls.size() != targets.size()) fail(ErrorCode::ShapeMismatch, "control and target counts differ");
  TPSParams theta;
  for (std::size_t k = 0; k < controls.size(); ++k) {
    theta.values.push_back(targets[k].x - controls[k].x);
    theta.values.push_back(targets[k].y - controls[k].y);
  }
  return TpsBasis(controls, out).apply(theta);
}

std::vector<double> warp(const std::vector<double>& raster, int channels, Resolution src_res, const SamplingGrid& grid) {
  if (raster.size() != static_cast<std::size_t>(channels) * src_res.pixels())
    fail(ErrorCode::ShapeMismatch, "raster size does not match its resolution");
  const int n_out = grid.resolution.pixels();
  if (grid.x.size() != static_cast<std::size_t>(n_out) || grid.y.size() != static_cast<std::size_t>(n_out))
    fail(ErrorCode::ShapeMismatch, "sampling grid does not match its resolution");
  std::vector<double> out(static_cast<std::size_t>(channels) * n_out);
  grid_sample<double>(raster.data(), channels, src_res.height, src_res.width, grid.x.data(), grid.y.data(), n_out,
                      out.data());
  return out;
}

ImageRGB warp(const ImageRGB& image, const SamplingGrid& grid) {
  if (image.resolution() != grid.resolution)
    fail(ErrorCode::ShapeMismatch, "grid resolution " + grid.resolution.to_string() + " differs from image " +
                                       image.resolution().to_string());
  const std::vector<double> src(image.data().begin(), image.data().end());
  const std::vector<double> out = warp(src, 3, image.resolution(), grid);
  ImageRGB result(grid.resolution);
  for (std::size_t i = 0; i < out.size(); ++i) result.data()[i] = static_cast<float>(out[i]);
  return result;
}

}  // namespace wgv::scwm
