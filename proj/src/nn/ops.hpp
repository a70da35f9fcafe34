#pragma once

#include <vector>

#include "nn/tape.hpp"

namespace wgv::nn {

// Convolution with a (Cout, Cin, k, k) weight; bias may be null.
Var conv2d(Tape& t, Var x, Var weight, Var bias, int stride, int pad);
Var instance_norm(Tape& t, Var x, Var gamma, Var beta, float eps = 1e-5f);
Var leaky_relu(Tape& t, Var x, float slope = 0.2f);
Var relu(Tape& t, Var x);
Var tanh(Tape& t, Var x);
Var sigmoid(Tape& t, Var x);
Var softmax_channels(Tape& t, Var x);
Var upsample2x(Tape& t, Var x);
Var concat_channels(Tape& t, const std::vector<Var>& xs);
Var slice_channels(Tape& t, Var x, int begin, int end);
// Sum of the listed channels into a single channel.
Var sum_channels(Tape& t, Var x, const std::vector<int>& channels);
Var crop_rows(Tape& t, Var x, int begin, int end);
Var add(Tape& t, Var a, Var b);
Var mul(Tape& t, Var a, Var b);
// a (N,1,H,W) broadcast over the channels of b (N,C,H,W).
Var mul_broadcast(Tape& t, Var a, Var b);
Var scale(Tape& t, Var a, float s);
Var add_scalar(Tape& t, Var a, float s);
// Affine map of each sample's flattened features: (N, in) -> (N, out).
Var linear(Tape& t, Var x, Var weight, Var bias);
Var l2_normalize_channels(Tape& t, Var x, float eps = 1e-6f);
// out[n, j, i] = <a[n,:,i], b[n,:,j]>; shape (N, Hb*Wb, Ha, Wa).
Var correlation(Tape& t, Var a, Var b);

// Scalar losses (batch means).
Var cross_entropy(Tape& t, Var prob, const Tensor& target);
Var masked_abs_mean(Tape& t, Var x, const Tensor& mask);
Var lsgan_d(Tape& t, Var real_scores, Var fake_scores);
Var lsgan_g(Tape& t, Var fake_scores);
Var l1_mean(Tape& t, Var a, const Tensor& b);
// Feature matching: mean over layers of mean |fake - real| (real is constant).
Var feature_matching(Tape& t, const std::vector<Var>& fake, const std::vector<Var>& real);
// Per-sample region-masked L1 averaged over samples whose region is not
// empty; region has shape (N,1,H,W). `present` receives the sample count used.
Var masked_l1(Tape& t, Var a, const Tensor& b, const Tensor& region, int* present = nullptr);
Var mean_square(Tape& t, Var x);
// sum_i w_i * s_i over scalar nodes.
Var weighted_sum(Tape& t, const std::vector<Var>& scalars, const std::vector<float>& weights);

}  // namespace wgv::nn
