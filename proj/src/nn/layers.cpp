#include "nn/layers.hpp"

#include <cmath>

#include "common/error.hpp"

namespace wgv::nn {

namespace {

void init_normal(Tensor& t, Rng& rng, float stddev) {
  for (auto& v : t.vec()) v = static_cast<float>(rng.normal()) * stddev;
}

}  // namespace

Conv Conv::make(ParameterStore& store, Rng& rng, const std::string& name, int cin, int cout, int k, int stride,
                int pad, bool with_bias, float gain) {
  Conv c;
  c.weight = &store.add(name + ".weight", Shape{cout, cin, k, k});
  init_normal(c.weight->value, rng, gain * std::sqrt(2.0f / static_cast<float>(cin * k * k)));
  if (with_bias) c.bias = &store.add(name + ".bias", Shape{1, cout, 1, 1});
  c.stride = stride;
  c.pad = pad;
  return c;
}

Var Conv::operator()(Tape& t, Var x) const {
  return conv2d(t, x, t.param(*weight), bias ? t.param(*bias) : nullptr, stride, pad);
}

InstanceNorm InstanceNorm::make(ParameterStore& store, const std::string& name, int channels) {
  InstanceNorm n;
  n.gamma = &store.add(name + ".gamma", Shape{1, channels, 1, 1});
  n.gamma->value.fill(1.0f);
  n.beta = &store.add(name + ".beta", Shape{1, channels, 1, 1});
  return n;
}

Var InstanceNorm::operator()(Tape& t, Var x) const {
  return instance_norm(t, x, t.param(*gamma), t.param(*beta));
}

Var activate(Tape& t, Var x, Act act) {
  switch (act) {
    case Act::LeakyRelu: return leaky_relu(t, x);
    case Act::Relu: return relu(t, x);
    case Act::None: break;
  }
  return x;
}

ConvBlock ConvBlock::make(ParameterStore& store, Rng& rng, const std::string& name, int cin, int cout, int k,
                          int stride, int pad, bool normalized, Act act) {
  ConvBlock b;
  // The norm's shift makes a conv bias redundant.
  b.conv = Conv::make(store, rng, name + ".conv", cin, cout, k, stride, pad, !normalized);
  if (normalized) b.norm = InstanceNorm::make(store, name + ".norm", cout);
  b.normalized = normalized;
  b.act = act;
  return b;
}

Var ConvBlock::operator()(Tape& t, Var x) const {
  Var y = conv(t, x);
  if (normalized) y = norm(t, y);
  return activate(t, y, act);
}

Linear Linear::make(ParameterStore& store, Rng& rng, const std::string& name, int in, int out, float gain) {
  Linear l;
  l.weight = &store.add(name + ".weight", Shape{out, in, 1, 1});
  init_normal(l.weight->value, rng, gain * std::sqrt(1.0f / static_cast<float>(in)));
  l.bias = &store.add(name + ".bias", Shape{1, out, 1, 1});
  return l;
}

Var Linear::operator()(Tape& t, Var x) const { return linear(t, x, t.param(*weight), t.param(*bias)); }

UNet::UNet(ParameterStore& store, Rng& rng, const std::string& prefix, int in_channels, int out_channels,
           std::vector<int> widths)
    : in_(in_channels), out_(out_channels), widths_(std::move(widths)) {
  if (widths_.empty()) fail(ErrorCode::InvalidArgument, "U-Net needs at least one level");
  const int levels = static_cast<int>(widths_.size());
  for (int i = 0; i < levels; ++i) {
    const std::string name = prefix + ".down" + std::to_string(i);
    if (i == 0)
      down_.push_back(ConvBlock::make(store, rng, name, in_, widths_[0], 3, 1, 1, true, Act::LeakyRelu));
    else
      down_.push_back(ConvBlock::make(store, rng, name, widths_[i - 1], widths_[i], 3, 2, 1, true, Act::LeakyRelu));
  }
  // up_[i] produces level i from level i+1 and skip i.
  for (int i = 0; i + 1 < levels; ++i) {
    up_.push_back(ConvBlock::make(store, rng, prefix + ".up" + std::to_string(i), widths_[i + 1] + widths_[i], widths_[i], 3,
                                  1, 1, true, Act::Relu));
  }
  head_ = Conv::make(store, rng, prefix + ".head", widths_[0], out_, 1, 1, 0, true, 0.5f);
}

Var UNet::forward(Tape& t, Var x) const {
  const Shape s = x->shape();
  if (s.c != in_)
    fail(ErrorCode::ShapeMismatch, "U-Net expects " + std::to_string(in_) + " input channels, got " + std::to_string(s.c));
  const int m = stride_multiple();
  if (s.h % m != 0 || s.w % m != 0)
    fail(ErrorCode::ShapeMismatch, "U-Net input sides must be multiples of " + std::to_string(m));
  std::vector<Var> skips;
  Var h = x;
  for (const auto& block : down_) {
    h = block(t, h);
    skips.push_back(h);
  }
  for (int i = static_cast<int>(up_.size()) - 1; i >= 0; --i) {
    h = upsample2x(t, h);
    h = up_[i](t, concat_channels(t, {h, skips[i]}));
  }
  return head_(t, h);
}

PatchDiscriminator::PatchDiscriminator(ParameterStore& store, Rng& rng, const std::string& prefix, int in_channels,
                                       int width)
    : in_(in_channels) {
  blocks_.push_back(ConvBlock::make(store, rng, prefix + ".b0", in_, width, 4, 2, 1, false, Act::LeakyRelu));
  blocks_.push_back(ConvBlock::make(store, rng, prefix + ".b1", width, width * 2, 4, 2, 1, true, Act::LeakyRelu));
  blocks_.push_back(ConvBlock::make(store, rng, prefix + ".b2", width * 2, width * 2, 3, 1, 1, true, Act::LeakyRelu));
  head_ = Conv::make(store, rng, prefix + ".head", width * 2, 1, 3, 1, 1, true, 0.5f);
}

PatchOutput PatchDiscriminator::forward(Tape& t, Var x) const {
  if (x->shape().c != in_)
    fail(ErrorCode::ShapeMismatch,
         "discriminator expects " + std::to_string(in_) + " channels, got " + std::to_string(x->shape().c));
  PatchOutput out;
  Var h = x;
  for (const auto& block : blocks_) {
    h = block(t, h);
    out.features.push_back(h);
  }
  out.scores = head_(t, h);
  return out;
}

}  // namespace wgv::nn
