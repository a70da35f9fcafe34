#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace wgv::nn {

// NCHW extents.
struct Shape {
  int n = 1;
  int c = 1;
  int h = 1;
  int w = 1;

  std::size_t plane() const noexcept { return static_cast<std::size_t>(h) * w; }
  std::size_t per_sample() const noexcept { return static_cast<std::size_t>(c) * plane(); }
  std::size_t numel() const noexcept { return static_cast<std::size_t>(n) * per_sample(); }
  bool operator==(const Shape&) const = default;
  std::string to_string() const;
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, float fill = 0.0f) : shape_(shape), data_(shape.numel(), fill) {}
  Tensor(Shape shape, std::vector<float> data);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  float* data() noexcept { return data_.data(); }
  const float* data() const noexcept { return data_.data(); }
  std::vector<float>& vec() noexcept { return data_; }
  const std::vector<float>& vec() const noexcept { return data_; }

  float* sample(int n) noexcept { return data_.data() + n * shape_.per_sample(); }
  const float* sample(int n) const noexcept { return data_.data() + n * shape_.per_sample(); }
  float* plane(int n, int c) noexcept { return sample(n) + c * shape_.plane(); }
  const float* plane(int n, int c) const noexcept { return sample(n) + c * shape_.plane(); }

  float& at(int n, int c, int h, int w) { return data_[((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + h) * shape_.w + w]; }
  float at(int n, int c, int h, int w) const {
    return data_[((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + h) * shape_.w + w];
  }

  // Scalar tensors hold a single value.
  float item() const { return data_.at(0); }
  void fill(float v);
  void add_(const Tensor& other);

  bool operator==(const Tensor&) const = default;

 private:
  Shape shape_{};
  std::vector<float> data_;
};

}  // namespace wgv::nn
