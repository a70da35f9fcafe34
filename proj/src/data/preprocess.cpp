#include "data/preprocess.hpp"

#include <cmath>

#include "common/error.hpp"

namespace wgv {

std::pair<ImageRGB, ParsingMap> make_agnostic(const ImageRGB& image, const ParsingMap& parsing) {
  if (image.resolution() != parsing.resolution())
    fail(ErrorCode::ShapeMismatch, "image " + image.resolution().to_string() + " vs parsing " +
                                       parsing.resolution().to_string());
  if (parsing.mode() != ParsingMode::OneHot) fail(ErrorCode::InvalidArgument, "make_agnostic needs a one-hot parsing");

  const Resolution res = image.resolution();
  const auto labels = parsing.labels();
  ImageRGB out_image = image;
  std::vector<std::uint8_t> out_labels(labels.size());
  for (int r = 0; r < res.height; ++r) {
    for (int c = 0; c < res.width; ++c) {
      const std::size_t p = static_cast<std::size_t>(r) * res.width + c;
      const Role role = static_cast<Role>(labels[p]);
      if (role == Role::Background || is_preserved(role)) {
        out_labels[p] = labels[p];
        continue;
      }
      out_labels[p] = index_of(Role::Background);
      for (int ch = 0; ch < 3; ++ch) out_image.at(ch, r, c) = kAgnosticGray;
    }
  }
  return {std::move(out_image), ParsingMap::from_labels(res, out_labels)};
}

PoseMap pose_to_heatmaps(const PoseKeypoints& kp, double sigma, Resolution res) {
  if (!(sigma > 0.0)) fail(ErrorCode::InvalidArgument, "heatmap sigma must be positive");
  kp.validate(res);
  PoseMap map{res, std::vector<float>(static_cast<std::size_t>(kNumKeypoints) * res.pixels(), 0.0f)};
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (int k = 0; k < kNumKeypoints; ++k) {
    const Keypoint& p = kp.points[k];
    if (!p.visible) continue;
    float* plane = map.values.data() + static_cast<std::size_t>(k) * res.pixels();
    for (int r = 0; r < res.height; ++r) {
      const double dr = r - p.row;
      for (int c = 0; c < res.width; ++c) {
        const double dc = c - p.col;
        plane[r * res.width + c] = static_cast<float>(std::exp(-(dr * dr + dc * dc) * inv));
      }
    }
  }
  return map;
}

}  // namespace wgv
