#include "nn/tape.hpp"

#include "common/error.hpp"

namespace wgv::nn {

std::string Shape::to_string() const {
  return "[" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," + std::to_string(w) + "]";
}

Tensor::Tensor(Shape shape, std::vector<float> data) : shape_(shape), data_(std::move(data)) {
  if (data_.size() != shape_.numel()) fail(ErrorCode::ShapeMismatch, "tensor data does not match shape " + shape.to_string());
}

void Tensor::fill(float v) {
  for (auto& x : data_) x = v;
}

void Tensor::add_(const Tensor& other) {
  if (other.shape_ != shape_) fail(ErrorCode::ShapeMismatch, "add_: " + shape_.to_string() + " vs " + other.shape_.to_string());
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
}

Parameter& ParameterStore::add(const std::string& name, Shape shape) {
  if (find(name)) fail(ErrorCode::InvalidArgument, "duplicate parameter '" + name + "'");
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->value = Tensor(shape);
  p->grad = Tensor(shape);
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter* ParameterStore::find(const std::string& name) {
  for (auto& p : params_)
    if (p->name == name) return p.get();
  return nullptr;
}

const Parameter* ParameterStore::find(const std::string& name) const {
  for (const auto& p : params_)
    if (p->name == name) return p.get();
  return nullptr;
}

std::vector<Parameter*> ParameterStore::all() {
  std::vector<Parameter*> out;
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<const Parameter*> ParameterStore::all() const {
  std::vector<const Parameter*> out;
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p->grad.fill(0.0f);
}

std::size_t ParameterStore::count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

Tensor& Node::ensure_grad() {
  if (grad.empty()) grad = Tensor(value.shape());
  return grad;
}

Var Tape::constant(Tensor value) {
  Node& n = nodes_.emplace_back();
  n.value = std::move(value);
  return &n;
}

Var Tape::leaf(Tensor value) {
  Node& n = nodes_.emplace_back();
  n.value = std::move(value);
  n.requires_grad = grad_enabled_;
  return &n;
}

Var Tape::param(Parameter& p) {
  Node& n = nodes_.emplace_back();
  n.value = p.value;
  n.requires_grad = grad_enabled_ && params_trainable_;
  if (n.requires_grad) {
    Parameter* target = &p;
    n.backward = [target](Node& self) { target->grad.add_(self.grad); };
  }
  return &n;
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, std::function<void(Node&)> backward) {
  Node& n = nodes_.emplace_back();
  n.value = std::move(value);
  if (grad_enabled_) {
    for (Var v : inputs)
      if (v && v->requires_grad) n.requires_grad = true;
    if (n.requires_grad) n.backward = std::move(backward);
  }
  return &n;
}

Var Tape::record(Tensor value, const std::vector<Var>& inputs, std::function<void(Node&)> backward) {
  Node& n = nodes_.emplace_back();
  n.value = std::move(value);
  if (grad_enabled_) {
    for (Var v : inputs)
      if (v && v->requires_grad) n.requires_grad = true;
    if (n.requires_grad) n.backward = std::move(backward);
  }
  return &n;
}

void Tape::backward(Var root) {
  if (!grad_enabled_) fail(ErrorCode::InvalidArgument, "backward on a tape recorded without gradients");
  if (root->value.size() != 1) fail(ErrorCode::ShapeMismatch, "backward root must be a scalar");
  if (!root->requires_grad) return;
  root->ensure_grad().fill(1.0f);
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    Node& n = *it;
    if (n.requires_grad && n.has_grad() && n.backward) n.backward(n);
  }
}

}  // namespace wgv::nn
