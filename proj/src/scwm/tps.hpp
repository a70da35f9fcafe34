#pragma once

#include <array>
#include <cmath>
#include <vector>

#include <Eigen/Core>

#include "common/error.hpp"
#include "common/raster.hpp"

namespace wgv::scwm {

// Normalized coordinates: x follows columns, y follows rows, both in [-1,1]
// with -1/+1 at the centers of the first/last pixel.
struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct ControlGrid {
  int rows = 5;
  int cols = 5;

  int size() const noexcept { return rows * cols; }
  // Row-major lattice over [-1,1]^2. Throws InvalidArgument below 2x2.
  std::vector<Point2> rest() const;
};

// Per-control-point displacement, interleaved (dx0, dy0, dx1, dy1, ...).
struct TPSParams {
  std::vector<double> values;
};

// Source coordinate for every output pixel, planar: x plane then y plane.
struct SamplingGrid {
  Resolution resolution{};
  std::vector<double> x;
  std::vector<double> y;
};

double pixel_to_norm(double index, int extent);
double norm_to_pixel(double coord, int extent);

// TPS radial basis r^2 log r^2, zero at r = 0.
inline double tps_kernel(double r2) { return r2 > 0.0 ? r2 * std::log(r2) : 0.0; }

// Precomputed linear map from displaced control points to the dense grid:
// grid = M * (rest + theta) per axis. Throws SingularSystem for degenerate
// control layouts.
class TpsBasis {
 public:
  TpsBasis(const std::vector<Point2>& controls, Resolution out);
  TpsBasis(const ControlGrid& grid, Resolution out) : TpsBasis(grid.rest(), out) {}

  Resolution resolution() const noexcept { return res_; }
  int controls() const noexcept { return static_cast<int>(rest_.size()); }
  const Eigen::MatrixXd& matrix() const noexcept { return m_; }
  const Eigen::MatrixXf& matrix_f() const noexcept { return mf_; }
  const std::vector<Point2>& rest() const noexcept { return rest_; }

  SamplingGrid apply(const TPSParams& theta) const;

 private:
  Resolution res_;
  std::vector<Point2> rest_;
  Eigen::MatrixXd m_;
  Eigen::MatrixXf mf_;
};

// Dense sampling grid of the TPS that sends each rest control point to
// rest + theta.
SamplingGrid tps_grid(const TPSParams& theta, const ControlGrid& grid, Resolution out);
// General form over arbitrary control points.
SamplingGrid tps_grid(const std::vector<Point2>& controls, const std::vector<Point2>& targets, Resolution out);

// Bilinear sampling with zero padding. Pixel coordinates within `kSnap` of an
// integer are snapped so the identity grid reproduces its input exactly.
inline constexpr double kSnap = 1e-5;

template <class T>
struct BilinearTap {
  int x0, y0;
  T wx, wy;
};

template <class T>
BilinearTap<T> bilinear_tap(T gx, T gy, int H, int W) {
  T px = (gx + T(1)) * T(0.5) * T(W - 1);
  T py = (gy + T(1)) * T(0.5) * T(H - 1);
  const T rx = std::round(px), ry = std::round(py);
  if (std::abs(px - rx) < T(kSnap)) px = rx;
  if (std::abs(py - ry) < T(kSnap)) py = ry;
  const T fx = std::floor(px), fy = std::floor(py);
  return {static_cast<int>(fx), static_cast<int>(fy), px - fx, py - fy};
}

// out[c, p] = bilinear(src[c], grid[p]); src is C x H x W, grid is two planes
// of Ho*Wo coordinates, out is C x Ho x Wo.
template <class T>
void grid_sample(const T* src, int C, int H, int W, const T* gx, const T* gy, int n_out, T* out) {
  for (int p = 0; p < n_out; ++p) {
    const auto tap = bilinear_tap<T>(gx[p], gy[p], H, W);
    const std::array<int, 4> xs{tap.x0, tap.x0 + 1, tap.x0, tap.x0 + 1};
    const std::array<int, 4> ys{tap.y0, tap.y0, tap.y0 + 1, tap.y0 + 1};
    const std::array<T, 4> ws{(1 - tap.wx) * (1 - tap.wy), tap.wx * (1 - tap.wy), (1 - tap.wx) * tap.wy,
                              tap.wx * tap.wy};
    for (int c = 0; c < C; ++c) {
      T v = 0;
      for (int k = 0; k < 4; ++k)
        if (ws[k] != T(0) && xs[k] >= 0 && xs[k] < W && ys[k] >= 0 && ys[k] < H)
          v += ws[k] * src[(static_cast<std::size_t>(c) * H + ys[k]) * W + xs[k]];
      out[static_cast<std::size_t>(c) * n_out + p] = v;
    }
  }
}

// Accumulates d(loss)/d(src) and d(loss)/d(grid) given d(loss)/d(out).
// Either destination may be null.
template <class T>
void grid_sample_backward(const T* src, int C, int H, int W, const T* gx, const T* gy, int n_out, const T* dout,
                          T* dsrc, T* dgx, T* dgy) {
  const T sx = T(0.5) * T(W - 1), sy = T(0.5) * T(H - 1);
  for (int p = 0; p < n_out; ++p) {
    const auto tap = bilinear_tap<T>(gx[p], gy[p], H, W);
    auto value = [&](int c, int x, int y) -> T {
      if (x < 0 || x >= W || y < 0 || y >= H) return T(0);
      return src[(static_cast<std::size_t>(c) * H + y) * W + x];
    };
    T ggx = 0, ggy = 0;
    for (int c = 0; c < C; ++c) {
      const T g = dout[static_cast<std::size_t>(c) * n_out + p];
      if (g == T(0)) continue;
      const T v00 = value(c, tap.x0, tap.y0), v10 = value(c, tap.x0 + 1, tap.y0);
      const T v01 = value(c, tap.x0, tap.y0 + 1), v11 = value(c, tap.x0 + 1, tap.y0 + 1);
      ggx += g * ((v10 - v00) * (1 - tap.wy) + (v11 - v01) * tap.wy);
      ggy += g * ((v01 - v00) * (1 - tap.wx) + (v11 - v10) * tap.wx);
      if (dsrc) {
        auto add = [&](int x, int y, T w) {
          if (x >= 0 && x < W && y >= 0 && y < H && w != T(0))
            dsrc[(static_cast<std::size_t>(c) * H + y) * W + x] += g * w;
        };
        add(tap.x0, tap.y0, (1 - tap.wx) * (1 - tap.wy));
        add(tap.x0 + 1, tap.y0, tap.wx * (1 - tap.wy));
        add(tap.x0, tap.y0 + 1, (1 - tap.wx) * tap.wy);
        add(tap.x0 + 1, tap.y0 + 1, tap.wx * tap.wy);
      }
    }
    if (dgx) dgx[p] += ggx * sx;
    if (dgy) dgy[p] += ggy * sy;
  }
}

// Bilinear warp of a planar raster with `channels` planes at the grid's
// resolution. Throws ShapeMismatch.
std::vector<double> warp(const std::vector<double>& raster, int channels, Resolution src_res, const SamplingGrid& grid);
ImageRGB warp(const ImageRGB& image, const SamplingGrid& grid);

}  // namespace wgv::scwm
