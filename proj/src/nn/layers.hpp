#pragma once

#include <string>
#include <vector>

#include "common/rng.hpp"
#include "nn/ops.hpp"
#include "nn/tape.hpp"

namespace wgv::nn {

enum class Act { None, LeakyRelu, Relu };

struct Conv {
  Parameter* weight = nullptr;
  Parameter* bias = nullptr;
  int stride = 1;
  int pad = 0;

  // He-normal weights scaled by `gain`, zero bias.
  static Conv make(ParameterStore& store, Rng& rng, const std::string& name, int cin, int cout, int k, int stride,
                   int pad, bool with_bias = true, float gain = 1.0f);
  Var operator()(Tape& t, Var x) const;
};

struct InstanceNorm {
  Parameter* gamma = nullptr;
  Parameter* beta = nullptr;

  static InstanceNorm make(ParameterStore& store, const std::string& name, int channels);
  Var operator()(Tape& t, Var x) const;
};

// conv -> optional instance norm -> activation.
struct ConvBlock {
  Conv conv;
  InstanceNorm norm;
  bool normalized = true;
  Act act = Act::LeakyRelu;

  static ConvBlock make(ParameterStore& store, Rng& rng, const std::string& name, int cin, int cout, int k,
                        int stride, int pad, bool normalized, Act act);
  Var operator()(Tape& t, Var x) const;
};

struct Linear {
  Parameter* weight = nullptr;
  Parameter* bias = nullptr;

  static Linear make(ParameterStore& store, Rng& rng, const std::string& name, int in, int out, float gain = 1.0f);
  Var operator()(Tape& t, Var x) const;
};

Var activate(Tape& t, Var x, Act act);

// Encoder/decoder with skip connections. The first level keeps the input
// resolution; each later level halves it with a stride-2 conv. The decoder
// upsamples, concatenates the matching skip, and convolves. Returns raw
// (pre-activation) outputs of a final 1x1 conv.
class UNet {
 public:
  UNet() = default;
  UNet(ParameterStore& store, Rng& rng, const std::string& prefix, int in_channels, int out_channels,
       std::vector<int> widths);

  int in_channels() const noexcept { return in_; }
  int out_channels() const noexcept { return out_; }
  // Spatial sides must be divisible by this.
  int stride_multiple() const noexcept { return 1 << (static_cast<int>(widths_.size()) - 1); }

  Var forward(Tape& t, Var x) const;

 private:
  int in_ = 0;
  int out_ = 0;
  std::vector<int> widths_;
  std::vector<ConvBlock> down_;
  std::vector<ConvBlock> up_;
  Conv head_;
};

struct PatchOutput {
  Var scores = nullptr;
  std::vector<Var> features;
};

// PatchGAN discriminator: two stride-2 4x4 convs, one stride-1 3x3 conv, then
// a 3x3 conv emitting one score per patch. Features are the hidden activations.
class PatchDiscriminator {
 public:
  PatchDiscriminator() = default;
  PatchDiscriminator(ParameterStore& store, Rng& rng, const std::string& prefix, int in_channels, int width = 32);

  int in_channels() const noexcept { return in_; }
  PatchOutput forward(Tape& t, Var x) const;

 private:
  int in_ = 0;
  std::vector<ConvBlock> blocks_;
  Conv head_;
};

}  // namespace wgv::nn
