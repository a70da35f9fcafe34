// Analytic gradients of every training objective against central
// differences, all in double precision.
#include <cmath>

#include "guide/wearing_guide.hpp"
#include "nn/loss_kernels.hpp"
#include "scwm/tps.hpp"
#include "support.hpp"
#include "wgpgm/wgpgm.hpp"

namespace wgv {
namespace {

using test::numeric_gradient;
using test::relative_error;
using Vec = std::vector<double>;

constexpr double kTol = 1e-4;

// Planar softmax over `classes` planes.
Vec softmax(const Vec& z, int classes) {
  const std::size_t P = z.size() / classes;
  Vec p(z.size());
  for (std::size_t i = 0; i < P; ++i) {
    double m = -1e300, s = 0;
    for (int c = 0; c < classes; ++c) m = std::max(m, z[c * P + i]);
    for (int c = 0; c < classes; ++c) s += std::exp(z[c * P + i] - m);
    for (int c = 0; c < classes; ++c) p[c * P + i] = std::exp(z[c * P + i] - m) / s;
  }
  return p;
}

// Pulls a probability-space gradient back through the softmax Jacobian.
Vec softmax_backward(const Vec& p, const Vec& g, int classes) {
  const std::size_t P = p.size() / classes;
  Vec out(p.size());
  for (std::size_t i = 0; i < P; ++i) {
    double dot = 0;
    for (int c = 0; c < classes; ++c) dot += g[c * P + i] * p[c * P + i];
    for (int c = 0; c < classes; ++c) out[c * P + i] = p[c * P + i] * (g[c * P + i] - dot);
  }
  return out;
}

Vec one_hot_target(Rng& rng, int classes, std::size_t pixels) {
  Vec t(classes * pixels, 0.0);
  for (std::size_t i = 0; i < pixels; ++i) t[rng.uniform_int(0, classes - 1) * pixels + i] = 1.0;
  return t;
}

TEST(Gradient, CrossEntropyInProbabilities) {
  Rng rng(1);
  const int K = kNumClasses;
  const std::size_t P = 24;
  const Vec target = one_hot_target(rng, K, P);
  const Vec p = softmax(test::random_vector(rng, K * P, -2, 2), K);
  Vec grad(p.size());
  kernels::cross_entropy<double>(p, target, K, grad);
  const Vec num = numeric_gradient([&](const Vec& x) { return kernels::cross_entropy<double>(x, target, K, {}); }, p);
  EXPECT_LT(relative_error(grad, num), kTol);
}

TEST(Gradient, CrossEntropyThroughSoftmax) {
  Rng rng(2);
  const int K = kNumClasses;
  const std::size_t P = 24;
  const Vec target = one_hot_target(rng, K, P);
  const Vec z = test::random_vector(rng, K * P, -2, 2);
  const Vec p = softmax(z, K);
  Vec gp(p.size());
  kernels::cross_entropy<double>(p, target, K, gp);
  const Vec analytic = softmax_backward(p, gp, K);
  const Vec num =
      numeric_gradient([&](const Vec& x) { return kernels::cross_entropy<double>(softmax(x, K), target, K, {}); }, z);
  EXPECT_LT(relative_error(analytic, num), kTol);
  // Closed form (p - t) / pixels.
  for (std::size_t i = 0; i < z.size(); ++i) EXPECT_NEAR(analytic[i], (p[i] - target[i]) / P, 1e-12);
}

TEST(Gradient, WearingGuideThroughBottomProbability) {
  Rng rng(3);
  const Resolution res{8, 6};
  const int K = kNumClasses;
  const std::size_t P = res.pixels();
  std::vector<std::uint8_t> bits(P);
  for (auto& b : bits) b = rng.chance(0.5);
  const WearingGuideMask mask(res, bits);
  auto bottom = [&](const Vec& probs) {
    Vec b(P, 0.0);
    for (int c = 0; c < K; ++c)
      if (is_bottom(static_cast<Role>(c)))
        for (std::size_t i = 0; i < P; ++i) b[i] += probs[c * P + i];
    return b;
  };
  const Vec z = test::random_vector(rng, K * P, -2, 2);
  const Vec p = softmax(z, K);
  Vec gb(P);
  wearing_guide_loss(mask, bottom(p), gb);
  Vec gp(p.size(), 0.0);
  for (int c = 0; c < K; ++c)
    if (is_bottom(static_cast<Role>(c)))
      for (std::size_t i = 0; i < P; ++i) gp[c * P + i] = gb[i];
  const Vec analytic = softmax_backward(p, gp, K);
  const Vec num = numeric_gradient([&](const Vec& x) { return wearing_guide_loss(mask, bottom(softmax(x, K))); }, z);
  EXPECT_LT(relative_error(analytic, num), kTol);
}

TEST(Gradient, LsganDiscriminator) {
  Rng rng(4);
  const Vec real = test::random_vector(rng, 30, -1, 2), fake = test::random_vector(rng, 30, -1, 2);
  Vec gr(real.size()), gf(fake.size());
  kernels::lsgan_d<double>(real, fake, gr, gf);
  EXPECT_LT(relative_error(gr, numeric_gradient([&](const Vec& x) { return kernels::lsgan_d<double>(x, fake, {}, {}); },
                                                real)),
            kTol);
  EXPECT_LT(relative_error(gf, numeric_gradient([&](const Vec& x) { return kernels::lsgan_d<double>(real, x, {}, {}); },
                                                fake)),
            kTol);
}

TEST(Gradient, LsganGenerator) {
  Rng rng(5);
  const Vec fake = test::random_vector(rng, 30, -1, 2);
  Vec g(fake.size());
  kernels::lsgan_g<double>(fake, g);
  EXPECT_LT(relative_error(g, numeric_gradient([](const Vec& x) { return kernels::lsgan_g<double>(x, {}); }, fake)),
            kTol);
}

// Keeps |a - b| away from zero so the finite differences stay on one side
// of every kink.
Vec offset_from(Rng& rng, const Vec& a) {
  Vec b = a;
  for (auto& v : b) v += (rng.chance(0.5) ? 1 : -1) * rng.uniform(0.05, 0.5);
  return b;
}

TEST(Gradient, FeatureMatching) {
  Rng rng(6);
  const std::vector<Vec> real{test::random_vector(rng, 20), test::random_vector(rng, 12), test::random_vector(rng, 6)};
  std::vector<Vec> fake;
  for (const auto& r : real) fake.push_back(offset_from(rng, r));
  std::vector<Vec> grad;
  wgpgm::feature_matching_loss(real, fake, &grad);
  for (std::size_t l = 0; l < fake.size(); ++l) {
    const Vec num = numeric_gradient(
        [&](const Vec& x) {
          auto f = fake;
          f[l] = x;
          return wgpgm::feature_matching_loss(real, f);
        },
        fake[l]);
    EXPECT_LT(relative_error(grad[l], num), kTol) << "layer " << l;
  }
}

TEST(Gradient, WarpMaskedL1ColorAndSeg) {
  Rng rng(7);
  const std::size_t P = 48;
  Vec region(P);
  for (auto& r : region) r = rng.chance(0.6);
  region[0] = 1;
  for (int channels : {3, 3}) {
    const Vec a = test::random_vector(rng, channels * P);
    const Vec b = offset_from(rng, a);
    Vec g(a.size());
    kernels::masked_l1<double>(a, b, region, channels, g);
    const Vec num =
        numeric_gradient([&](const Vec& x) { return kernels::masked_l1<double>(x, b, region, channels, {}); }, a);
    EXPECT_LT(relative_error(g, num), kTol);
  }
}

TEST(Gradient, TomL1) {
  Rng rng(8);
  const Vec a = test::random_vector(rng, 3 * 48);
  const Vec b = offset_from(rng, a);
  Vec g(a.size());
  kernels::l1_mean<double>(a, b, g);
  EXPECT_LT(relative_error(g, numeric_gradient([&](const Vec& x) { return kernels::l1_mean<double>(x, b, {}); }, a)),
            kTol);
}

TEST(Gradient, MaskedAbsMean) {
  Rng rng(9);
  const Vec mask = test::random_vector(rng, 40);
  Vec x = test::random_vector(rng, 40, -1, 1);
  for (auto& v : x) v += v < 0 ? -0.05 : 0.05;
  Vec g(x.size());
  kernels::masked_abs_mean<double>(mask, x, g);
  EXPECT_LT(
      relative_error(g, numeric_gradient([&](const Vec& v) { return kernels::masked_abs_mean<double>(mask, v, {}); }, x)),
      kTol);
}

// Color loss of a warped garment as a function of the dense grid and of the
// TPS parameters.
struct WarpChain {
  Resolution res{8, 6};
  Vec src, target, region;
  scwm::TpsBasis basis{scwm::ControlGrid{}, res};

  double loss_of_grid(const Vec& g) const {
    const std::size_t P = res.pixels();
    Vec out(3 * P);
    scwm::grid_sample<double>(src.data(), 3, res.height, res.width, g.data(), g.data() + P, static_cast<int>(P),
                              out.data());
    return kernels::masked_l1<double>(out, target, region, 3, {});
  }
  Vec grid_of(const Vec& theta) const {
    const scwm::SamplingGrid g = basis.apply(scwm::TPSParams{theta});
    Vec out(g.x);
    out.insert(out.end(), g.y.begin(), g.y.end());
    return out;
  }
  Vec grad_grid(const Vec& g) const {
    const std::size_t P = res.pixels();
    Vec out(3 * P), dout(3 * P), dg(2 * P, 0.0);
    scwm::grid_sample<double>(src.data(), 3, res.height, res.width, g.data(), g.data() + P, static_cast<int>(P),
                              out.data());
    kernels::masked_l1<double>(out, target, region, 3, dout);
    scwm::grid_sample_backward<double>(src.data(), 3, res.height, res.width, g.data(), g.data() + P,
                                       static_cast<int>(P), dout.data(), nullptr, dg.data(), dg.data() + P);
    return dg;
  }
};

WarpChain make_chain(Rng& rng) {
  WarpChain c;
  const std::size_t P = c.res.pixels();
  c.src = test::random_vector(rng, 3 * P);
  c.target = test::random_vector(rng, 3 * P, 2.0, 3.0);  // out of the warp's range, so no |.| kinks
  c.region.assign(P, 0.0);
  for (auto& r : c.region) r = rng.chance(0.7);
  c.region[5] = 1;
  return c;
}

TEST(Gradient, WarpChainWrtGrid) {
  Rng rng(10);
  const WarpChain c = make_chain(rng);
  Vec theta(50);
  for (auto& v : theta) v = rng.uniform(-0.08, 0.08);
  const Vec g = c.grid_of(theta);
  const Vec num = numeric_gradient([&](const Vec& x) { return c.loss_of_grid(x); }, g);
  EXPECT_LT(relative_error(c.grad_grid(g), num), 1e-3);
}

TEST(Gradient, WarpChainWrtTheta) {
  Rng rng(11);
  const WarpChain c = make_chain(rng);
  for (int trial = 0; trial < 3; ++trial) {
    Vec theta(50);
    for (auto& v : theta) v = rng.uniform(-0.08, 0.08);
    const Vec dg = c.grad_grid(c.grid_of(theta));
    // grid = M (rest + theta) per axis, so d/dtheta = M^T dgrid per axis.
    const Eigen::MatrixXd& M = c.basis.matrix();
    const std::size_t P = c.res.pixels();
    const Eigen::Map<const Eigen::VectorXd> gx(dg.data(), P), gy(dg.data() + P, P);
    const Eigen::VectorXd tx = M.transpose() * gx, ty = M.transpose() * gy;
    Vec analytic(50);
    for (int k = 0; k < 25; ++k) {
      analytic[2 * k] = tx(k);
      analytic[2 * k + 1] = ty(k);
    }
    const Vec num = numeric_gradient([&](const Vec& x) { return c.loss_of_grid(c.grid_of(x)); }, theta);
    EXPECT_LT(relative_error(analytic, num), 1e-3);
  }
}

}  // namespace
}  // namespace wgv
