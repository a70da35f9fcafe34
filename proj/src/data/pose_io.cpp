#include "data/pose_io.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "common/error.hpp"

namespace wgv {

void save_keypoints(const std::filesystem::path& path, const PoseKeypoints& kp) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& p : kp.points) arr.push_back({{"row", p.row}, {"col", p.col}, {"visible", p.visible}});
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  out << nlohmann::json{{"keypoints", arr}}.dump() << '\n';
}

PoseKeypoints load_keypoints(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::CorruptFile, "cannot open keypoints '" + path.string() + "'");
  PoseKeypoints kp;
  try {
    nlohmann::json j;
    in >> j;
    const auto& arr = j.at("keypoints");
    if (arr.size() != kp.points.size())
      fail(ErrorCode::SchemaMismatch, "expected 17 keypoints in '" + path.string() + "'");
    for (std::size_t k = 0; k < arr.size(); ++k) {
      kp.points[k].row = arr[k].at("row").get<int>();
      kp.points[k].col = arr[k].at("col").get<int>();
      kp.points[k].visible = arr[k].at("visible").get<bool>();
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::CorruptFile, "malformed keypoints '" + path.string() + "': " + e.what());
  }
  return kp;
}

}  // namespace wgv
