#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "common/raster.hpp"
#include "data/schema.hpp"

namespace wgv {

enum class ParsingMode { OneHot, Probability };

// 17-channel per-pixel class weights, planar (class-major).
class ParsingMap {
 public:
  ParsingMap() = default;
  ParsingMap(Resolution res, ParsingMode mode)
      : res_(res), mode_(mode), values_(static_cast<std::size_t>(kNumClasses) * res.pixels(), 0.0f) {}

  static ParsingMap from_labels(Resolution res, const std::vector<std::uint8_t>& labels);

  const Resolution& resolution() const noexcept { return res_; }
  ParsingMode mode() const noexcept { return mode_; }

  float& at(int cls, int row, int col) {
    return values_[(static_cast<std::size_t>(cls) * res_.height + row) * res_.width + col];
  }
  float at(int cls, int row, int col) const {
    return values_[(static_cast<std::size_t>(cls) * res_.height + row) * res_.width + col];
  }
  std::vector<float>& values() noexcept { return values_; }
  const std::vector<float>& values() const noexcept { return values_; }

  // Arg-max label per pixel, ties resolved toward the lowest class index.
  std::vector<std::uint8_t> labels() const;
  // Sum of the given class channels per pixel.
  std::vector<float> slice_sum(std::initializer_list<Role> roles) const;

  // Normalization within `tol` per pixel; one-hot mode also requires exact 0/1.
  void validate(double tol = 1e-5) const;

  bool operator==(const ParsingMap&) const = default;

 private:
  Resolution res_{};
  ParsingMode mode_ = ParsingMode::OneHot;
  std::vector<float> values_;
};

struct Keypoint {
  int row = 0;
  int col = 0;
  bool visible = false;
  bool operator==(const Keypoint&) const = default;
};

// COCO-17 ordering.
enum class KeypointId : int {
  Nose = 0, LeftEye, RightEye, LeftEar, RightEar, LeftShoulder, RightShoulder, LeftElbow, RightElbow,
  LeftWrist, RightWrist, LeftHip, RightHip, LeftKnee, RightKnee, LeftAnkle, RightAnkle
};

struct PoseKeypoints {
  std::array<Keypoint, kNumKeypoints> points{};

  const Keypoint& operator[](KeypointId id) const { return points[static_cast<int>(id)]; }
  Keypoint& operator[](KeypointId id) { return points[static_cast<int>(id)]; }
  // Throws KeypointOutOfBounds for visible points outside the raster.
  void validate(Resolution res) const;
  bool operator==(const PoseKeypoints&) const = default;
};

// 17 planar channels of Gaussian keypoint heatmaps.
struct PoseMap {
  Resolution resolution{};
  std::vector<float> values;

  float at(int k, int row, int col) const {
    return values[(static_cast<std::size_t>(k) * resolution.height + row) * resolution.width + col];
  }
};

enum class GarmentKind { Top, Bottom };

// Part labels of a garment segmentation.
enum class GarmentPart : std::uint8_t { Background = 0, Main = 1, Secondary = 2 };

struct GarmentRecord {
  ImageRGB image;
  // One label per pixel; the 3-channel one-hot form is derived on demand.
  std::vector<std::uint8_t> seg;
  GarmentKind kind = GarmentKind::Top;

  // 3 planar channels (background / main / secondary).
  std::vector<float> seg_one_hot() const;
  // 1 where the pixel belongs to the garment (main or secondary).
  std::vector<float> garment_mask() const;
  void validate() const;
};

struct SampleRecord {
  std::string id;
  ImageRGB model_image;
  ParsingMap parsing;
  PoseKeypoints keypoints;
  GarmentRecord top;
  std::optional<GarmentRecord> bottom;
  ImageRGB agnostic_image;
  ParsingMap agnostic_parsing;

  Resolution resolution() const { return model_image.resolution(); }
  void validate() const;
};

// Blank catalog photo used when a sample has no bottom garment.
GarmentRecord empty_garment(Resolution res, GarmentKind kind);

}  // namespace wgv
