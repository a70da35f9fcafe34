#include "nn/adam.hpp"

#include <cmath>

#include "nn/checkpoint.hpp"

namespace wgv::nn {

Adam::Adam(ParameterStore& store, AdamOptions options) : store_(store), opt_(options) {
  for (const Parameter* p : store_.all()) {
    m_.emplace_back(p->value.shape());
    v_.emplace_back(p->value.shape());
  }
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(static_cast<double>(opt_.beta1), static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(static_cast<double>(opt_.beta2), static_cast<double>(t_));
  const float step = static_cast<float>(opt_.lr * std::sqrt(bc2) / bc1);
  const float b1 = opt_.beta1, b2 = opt_.beta2;
  auto params = store_.all();
  for (std::size_t k = 0; k < params.size(); ++k) {
    float* w = params[k]->value.data();
    float* g = params[k]->grad.data();
    float* m = m_[k].data();
    float* v = v_[k].data();
    const std::size_t n = params[k]->value.size();
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = b1 * m[i] + (1.0f - b1) * g[i];
      v[i] = b2 * v[i] + (1.0f - b2) * g[i] * g[i];
      w[i] -= step * m[i] / (std::sqrt(v[i]) + opt_.eps);
      g[i] = 0.0f;
    }
  }
}

void Adam::save(Checkpoint& ckpt, const std::string& prefix) const {
  auto params = store_.all();
  for (std::size_t k = 0; k < params.size(); ++k) {
    ckpt.put(prefix + ".m." + params[k]->name, m_[k]);
    ckpt.put(prefix + ".v." + params[k]->name, v_[k]);
  }
  ckpt.put(prefix + ".t", Tensor(Shape{1, 1, 1, 1}, {static_cast<float>(t_)}));
}

void Adam::load(const Checkpoint& ckpt, const std::string& prefix) {
  auto params = store_.all();
  for (std::size_t k = 0; k < params.size(); ++k) {
    m_[k] = ckpt.get(prefix + ".m." + params[k]->name, params[k]->value.shape());
    v_[k] = ckpt.get(prefix + ".v." + params[k]->name, params[k]->value.shape());
  }
  t_ = static_cast<long long>(ckpt.get(prefix + ".t", Shape{1, 1, 1, 1}).item());
}

}  // namespace wgv::nn
