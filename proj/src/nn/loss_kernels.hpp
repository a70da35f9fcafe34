#pragma once

// Scalar-generic loss kernels. Training instantiates them with float; the
// gradient checks use double. Each returns the loss and, when `grad` is not
// empty, writes (or for *_acc variants, adds) d(loss)/d(first argument).

#include <cmath>
#include <cstddef>
#include <span>

#include "common/error.hpp"

namespace wgv::kernels {

template <class T>
T sign_of(T v) {
  return v > T(0) ? T(1) : (v < T(0) ? T(-1) : T(0));
}

// mean_i |mask_i * x_i|
template <class T>
T masked_abs_mean(std::span<const T> mask, std::span<const T> x, std::span<T> grad) {
  const std::size_t n = x.size();
  if (mask.size() != n) fail(ErrorCode::ShapeMismatch, "mask and input differ in size");
  if (n == 0) return T(0);
  T sum = 0;
  for (std::size_t i = 0; i < n; ++i) sum += std::abs(mask[i] * x[i]);
  if (!grad.empty())
    for (std::size_t i = 0; i < n; ++i) grad[i] = mask[i] * sign_of(mask[i] * x[i]) / T(n);
  return sum / T(n);
}

// Pixelwise cross-entropy of planar class probabilities against a target
// distribution, averaged over pixels. Probabilities are floored at `floor`.
template <class T>
T cross_entropy(std::span<const T> prob, std::span<const T> target, int classes, std::span<T> grad,
                T floor = T(1e-30)) {
  if (prob.size() != target.size() || classes <= 0 || prob.size() % classes != 0)
    fail(ErrorCode::ShapeMismatch, "prediction and target differ in shape");
  const std::size_t pixels = prob.size() / classes;
  if (pixels == 0) return T(0);
  T sum = 0;
  for (std::size_t i = 0; i < prob.size(); ++i) {
    const T p = prob[i] > floor ? prob[i] : floor;
    if (target[i] != T(0)) sum -= target[i] * std::log(p);
    if (!grad.empty()) grad[i] = prob[i] > floor ? -target[i] / (p * T(pixels)) : T(0);
  }
  return sum / T(pixels);
}

// Least-squares GAN discriminator objective: 1/2 mean((real-1)^2) + 1/2 mean(fake^2).
template <class T>
T lsgan_d(std::span<const T> real, std::span<const T> fake, std::span<T> grad_real, std::span<T> grad_fake) {
  if (real.empty() || fake.empty()) fail(ErrorCode::EmptyScores, "discriminator produced no patch scores");
  T sr = 0, sf = 0;
  for (T r : real) sr += (r - 1) * (r - 1);
  for (T f : fake) sf += f * f;
  if (!grad_real.empty())
    for (std::size_t i = 0; i < real.size(); ++i) grad_real[i] = (real[i] - 1) / T(real.size());
  if (!grad_fake.empty())
    for (std::size_t i = 0; i < fake.size(); ++i) grad_fake[i] = fake[i] / T(fake.size());
  return T(0.5) * sr / T(real.size()) + T(0.5) * sf / T(fake.size());
}

// Least-squares GAN generator objective: mean((fake-1)^2).
template <class T>
T lsgan_g(std::span<const T> fake, std::span<T> grad) {
  if (fake.empty()) fail(ErrorCode::EmptyScores, "discriminator produced no patch scores");
  T s = 0;
  for (T f : fake) s += (f - 1) * (f - 1);
  if (!grad.empty())
    for (std::size_t i = 0; i < fake.size(); ++i) grad[i] = T(2) * (fake[i] - 1) / T(fake.size());
  return s / T(fake.size());
}

// mean |a - b|
template <class T>
T l1_mean(std::span<const T> a, std::span<const T> b, std::span<T> grad_a) {
  if (a.size() != b.size()) fail(ErrorCode::ShapeMismatch, "L1 operands differ in size");
  if (a.empty()) return T(0);
  T s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  if (!grad_a.empty())
    for (std::size_t i = 0; i < a.size(); ++i) grad_a[i] = sign_of(a[i] - b[i]) / T(a.size());
  return s / T(a.size());
}

// L1 over planar channels restricted to a per-pixel region:
// sum_{c,p} region_p |a - b| / (channels * sum_p region_p). Zero when the
// region is empty (callers treat that case as absent).
template <class T>
T masked_l1(std::span<const T> a, std::span<const T> b, std::span<const T> region, int channels, std::span<T> grad_a) {
  const std::size_t pixels = region.size();
  if (a.size() != b.size() || a.size() != pixels * channels)
    fail(ErrorCode::ShapeMismatch, "masked L1 operands differ in shape");
  T area = 0;
  for (T r : region) area += r;
  if (!grad_a.empty())
    for (auto& g : grad_a) g = 0;
  if (area <= T(0)) return T(0);
  const T denom = area * T(channels);
  T s = 0;
  for (int c = 0; c < channels; ++c) {
    for (std::size_t p = 0; p < pixels; ++p) {
      const std::size_t i = c * pixels + p;
      const T d = a[i] - b[i];
      s += region[p] * std::abs(d);
      if (!grad_a.empty()) grad_a[i] = region[p] * sign_of(d) / denom;
    }
  }
  return s / denom;
}

}  // namespace wgv::kernels
