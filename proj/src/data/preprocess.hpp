#pragma once

#include <utility>

#include "data/types.hpp"

namespace wgv {

inline constexpr float kAgnosticGray = 0.5f;

// Removes every garment/body-clothing trace, keeping hair, face, hands and
// feet. Other foreground pixels become neutral gray and class background.
std::pair<ImageRGB, ParsingMap> make_agnostic(const ImageRGB& image, const ParsingMap& parsing);

// Heatmap sigma used by the data pipeline: 1.5% of the image height.
inline double default_pose_sigma(Resolution res) { return 0.015 * res.height; }

PoseMap pose_to_heatmaps(const PoseKeypoints& kp, double sigma, Resolution res);

}  // namespace wgv
