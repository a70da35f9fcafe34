#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "data/manifest.hpp"
#include "data/types.hpp"

namespace wgv {

// One sample held as 8-bit rasters and label bytes. Expands back into a full
// SampleRecord on demand, so whole training sets fit in memory.
struct CompactSample {
  std::string id;
  Resolution res;
  std::vector<std::uint8_t> model_rgb;  // planar, 3 x pixels
  std::vector<std::uint8_t> parsing;    // label per pixel
  PoseKeypoints keypoints;
  std::vector<std::uint8_t> top_rgb;
  std::vector<std::uint8_t> top_seg;
  bool has_bottom = false;
  std::vector<std::uint8_t> bottom_rgb;
  std::vector<std::uint8_t> bottom_seg;

  static CompactSample from_record(const SampleRecord& s);
  SampleRecord expand() const;
};

class SampleCache {
 public:
  // Loads and validates every sample in manifest order.
  static SampleCache load(const DatasetManifest& manifest);

  std::size_t size() const noexcept { return samples_.size(); }
  const CompactSample& operator[](std::size_t i) const { return samples_.at(i); }
  Resolution resolution() const noexcept { return res_; }

 private:
  Resolution res_{};
  std::vector<CompactSample> samples_;
};

}  // namespace wgv
