#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace wgv {

struct Resolution {
  int height = 0;
  int width = 0;

  int pixels() const noexcept { return height * width; }
  bool operator==(const Resolution&) const = default;

  // Throws InvalidResolution unless both sides are positive and 4:3.
  void validate() const;
  std::string to_string() const;
  // Parses "HxW", e.g. "64x48".
  static Resolution parse(const std::string& text);
};

inline constexpr Resolution kDeskResolution{64, 48};

// Planar (channel-major) 3-channel image with intensities in [0,1].
class ImageRGB {
 public:
  ImageRGB() = default;
  explicit ImageRGB(Resolution res, float fill = 0.0f)
      : res_(res), data_(static_cast<std::size_t>(3) * res.pixels(), fill) {}

  const Resolution& resolution() const noexcept { return res_; }
  int height() const noexcept { return res_.height; }
  int width() const noexcept { return res_.width; }

  float& at(int c, int row, int col) {
    return data_[(static_cast<std::size_t>(c) * res_.height + row) * res_.width + col];
  }
  float at(int c, int row, int col) const {
    return data_[(static_cast<std::size_t>(c) * res_.height + row) * res_.width + col];
  }

  std::vector<float>& data() noexcept { return data_; }
  const std::vector<float>& data() const noexcept { return data_; }

  // Throws ShapeMismatch/InvalidArgument when the invariants are broken.
  void validate() const;

  bool operator==(const ImageRGB&) const = default;

 private:
  Resolution res_{};
  std::vector<float> data_;
};

// Quantization used by the 8-bit PNG codec.
inline unsigned char to_byte(float v) {
  const float c = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
  return static_cast<unsigned char>(c * 255.0f + 0.5f);
}
inline float from_byte(unsigned char b) { return static_cast<float>(b) / 255.0f; }

}  // namespace wgv
