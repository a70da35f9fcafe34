#pragma once

#include <filesystem>

#include "data/types.hpp"

namespace wgv {

void save_keypoints(const std::filesystem::path& path, const PoseKeypoints& kp);
PoseKeypoints load_keypoints(const std::filesystem::path& path);

}  // namespace wgv
