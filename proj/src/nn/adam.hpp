#pragma once

#include <string>
#include <vector>

#include "nn/tape.hpp"

namespace wgv::nn {

class Checkpoint;

struct AdamOptions {
  float lr = 2e-4f;
  float beta1 = 0.5f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
};

class Adam {
 public:
  Adam(ParameterStore& store, AdamOptions options);

  // Applies one update from the accumulated grads, then clears them.
  void step();
  long long steps() const noexcept { return t_; }

  void save(Checkpoint& ckpt, const std::string& prefix) const;
  void load(const Checkpoint& ckpt, const std::string& prefix);

 private:
  ParameterStore& store_;
  AdamOptions opt_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  long long t_ = 0;
};

}  // namespace wgv::nn
