#include "data/types.hpp"

#include <cmath>

#include "common/error.hpp"

namespace wgv {

ParsingMap ParsingMap::from_labels(Resolution res, const std::vector<std::uint8_t>& labels) {
  if (labels.size() != static_cast<std::size_t>(res.pixels()))
    fail(ErrorCode::ShapeMismatch, "label buffer does not match resolution " + res.to_string());
  ParsingMap map(res, ParsingMode::OneHot);
  const std::size_t plane = res.pixels();
  for (std::size_t p = 0; p < plane; ++p) {
    if (labels[p] >= kNumClasses)
      fail(ErrorCode::SchemaMismatch, "label index " + std::to_string(labels[p]) + " outside the 17-class schema");
    map.values_[labels[p] * plane + p] = 1.0f;
  }
  return map;
}

std::vector<std::uint8_t> ParsingMap::labels() const {
  const std::size_t plane = res_.pixels();
  std::vector<std::uint8_t> out(plane, 0);
  for (std::size_t p = 0; p < plane; ++p) {
    float best = values_[p];
    for (int c = 1; c < kNumClasses; ++c) {
      const float v = values_[c * plane + p];
      if (v > best) {
        best = v;
        out[p] = static_cast<std::uint8_t>(c);
      }
    }
  }
  return out;
}

std::vector<float> ParsingMap::slice_sum(std::initializer_list<Role> roles) const {
  const std::size_t plane = res_.pixels();
  std::vector<float> out(plane, 0.0f);
  for (Role r : roles) {
    const float* src = values_.data() + index_of(r) * plane;
    for (std::size_t p = 0; p < plane; ++p) out[p] += src[p];
  }
  return out;
}

void ParsingMap::validate(double tol) const {
  const std::size_t plane = res_.pixels();
  if (values_.size() != plane * kNumClasses)
    fail(ErrorCode::ShapeMismatch, "parsing buffer does not match resolution " + res_.to_string());
  for (std::size_t p = 0; p < plane; ++p) {
    double sum = 0.0;
    int ones = 0;
    for (int c = 0; c < kNumClasses; ++c) {
      const float v = values_[c * plane + p];
      if (!(v >= -tol && v <= 1.0 + tol)) fail(ErrorCode::InvalidArgument, "parsing weight outside [0,1]");
      if (mode_ == ParsingMode::OneHot) {
        if (v != 0.0f && v != 1.0f) fail(ErrorCode::InvalidArgument, "one-hot parsing holds a fractional weight");
        ones += v == 1.0f;
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > tol)
      fail(ErrorCode::InvalidArgument, "parsing weights do not sum to 1 at pixel " + std::to_string(p));
    if (mode_ == ParsingMode::OneHot && ones != 1)
      fail(ErrorCode::InvalidArgument, "one-hot parsing pixel without exactly one active class");
  }
}

void PoseKeypoints::validate(Resolution res) const {
  for (std::size_t k = 0; k < points.size(); ++k) {
    const auto& p = points[k];
    if (p.visible && (p.row < 0 || p.row >= res.height || p.col < 0 || p.col >= res.width))
      fail(ErrorCode::KeypointOutOfBounds, "keypoint " + std::to_string(k) + " at (" + std::to_string(p.row) + "," +
                                               std::to_string(p.col) + ") lies outside " + res.to_string());
  }
}

std::vector<float> GarmentRecord::seg_one_hot() const {
  const std::size_t plane = seg.size();
  std::vector<float> out(3 * plane, 0.0f);
  for (std::size_t p = 0; p < plane; ++p) out[seg[p] * plane + p] = 1.0f;
  return out;
}

std::vector<float> GarmentRecord::garment_mask() const {
  std::vector<float> out(seg.size());
  for (std::size_t p = 0; p < seg.size(); ++p) out[p] = seg[p] != 0 ? 1.0f : 0.0f;
  return out;
}

void GarmentRecord::validate() const {
  image.validate();
  if (seg.size() != static_cast<std::size_t>(image.resolution().pixels()))
    fail(ErrorCode::ShapeMismatch, "garment segmentation does not match its image");
  for (auto s : seg)
    if (s > 2) fail(ErrorCode::SchemaMismatch, "garment segmentation label outside {0,1,2}");
}

void SampleRecord::validate() const {
  const Resolution res = resolution();
  model_image.validate();
  agnostic_image.validate();
  parsing.validate();
  agnostic_parsing.validate();
  keypoints.validate(res);
  top.validate();
  if (parsing.resolution() != res || agnostic_image.resolution() != res || agnostic_parsing.resolution() != res ||
      top.image.resolution() != res)
    fail(ErrorCode::ShapeMismatch, "sample '" + id + "' rasters do not share one resolution");
  if (top.kind != GarmentKind::Top) fail(ErrorCode::SchemaMismatch, "top garment has kind bottom");
  if (bottom) {
    bottom->validate();
    if (bottom->image.resolution() != res) fail(ErrorCode::ShapeMismatch, "bottom garment resolution differs");
    if (bottom->kind != GarmentKind::Bottom) fail(ErrorCode::SchemaMismatch, "bottom garment has kind top");
  }
}

GarmentRecord empty_garment(Resolution res, GarmentKind kind) {
  GarmentRecord g;
  g.image = ImageRGB(res, 1.0f);
  g.seg.assign(res.pixels(), 0);
  g.kind = kind;
  return g;
}

}  // namespace wgv
