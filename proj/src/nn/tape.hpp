#pragma once

#include <deque>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "nn/tensor.hpp"

namespace wgv::nn {

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
};

// Owns the trainable tensors of one network; order of registration is the
// serialization order.
class ParameterStore {
 public:
  Parameter& add(const std::string& name, Shape shape);
  Parameter* find(const std::string& name);
  const Parameter* find(const std::string& name) const;

  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;
  void zero_grad();
  std::size_t count() const;

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

struct Node {
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  // Propagates this node's grad into its inputs.
  std::function<void(Node&)> backward;
  // Set when value = softmax over channels of this node.
  Node* softmax_logits = nullptr;

  Tensor& ensure_grad();
  bool has_grad() const noexcept { return !grad.empty(); }
  const Shape& shape() const noexcept { return value.shape(); }
};

using Var = Node*;

// Reverse-mode recorder. Nodes live until the tape is destroyed.
class Tape {
 public:
  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool grad_enabled() const noexcept { return grad_enabled_; }
  // While false, param() yields constants, so parameters collect no grads.
  void set_params_trainable(bool on) noexcept { params_trainable_ = on; }
  bool params_trainable() const noexcept { return params_trainable_; }

  Var constant(Tensor value);
  Var leaf(Tensor value);  // requires grad
  Var param(Parameter& p);

  // Registers an op result. `backward` is kept only if an input needs grad.
  Var record(Tensor value, std::initializer_list<Var> inputs, std::function<void(Node&)> backward);
  Var record(Tensor value, const std::vector<Var>& inputs, std::function<void(Node&)> backward);

  // Seeds d(root)=1 for a scalar root and runs all recorded closures.
  void backward(Var root);

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  std::deque<Node> nodes_;
  bool grad_enabled_;
  bool params_trainable_ = true;
};

// Scoped params_trainable(false).
class FrozenParams {
 public:
  explicit FrozenParams(Tape& t) : tape_(t), prev_(t.params_trainable()) { t.set_params_trainable(false); }
  ~FrozenParams() { tape_.set_params_trainable(prev_); }
  FrozenParams(const FrozenParams&) = delete;
  FrozenParams& operator=(const FrozenParams&) = delete;

 private:
  Tape& tape_;
  bool prev_;
};

}  // namespace wgv::nn
