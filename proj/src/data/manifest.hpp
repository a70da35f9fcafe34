#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "common/raster.hpp"
#include "data/schema.hpp"

namespace wgv {

enum class Split { Train, TestPair, TestUnpair };

std::string to_string(Split s);
Split parse_split(const std::string& text);

struct ManifestEntry {
  std::string id;
  std::string top_id;
  std::optional<std::string> bottom_id;
  // Only set in unpaired manifests: the garments the model originally wore.
  std::optional<std::string> original_top_id;
  std::optional<std::string> original_bottom_id;
  bool has_original = false;

  bool operator==(const ManifestEntry&) const = default;
};

struct DatasetManifest {
  LabelSchema schema = LabelSchema::standard();
  Resolution resolution = kDeskResolution;
  Split split = Split::Train;
  std::vector<ManifestEntry> samples;
  // Directory the relative raster paths resolve against (not serialized).
  std::filesystem::path root;

  std::filesystem::path model_path(const std::string& id) const { return root / "models" / (id + ".png"); }
  std::filesystem::path parsing_path(const std::string& id) const { return root / "parsing" / (id + ".png"); }
  std::filesystem::path pose_path(const std::string& id) const { return root / "pose" / (id + ".json"); }
  std::filesystem::path top_path(const std::string& id) const { return root / "tops" / (id + ".png"); }
  std::filesystem::path top_seg_path(const std::string& id) const { return root / "tops_seg" / (id + ".png"); }
  std::filesystem::path bottom_path(const std::string& id) const { return root / "bottoms" / (id + ".png"); }
  std::filesystem::path bottom_seg_path(const std::string& id) const { return root / "bottoms_seg" / (id + ".png"); }

  const ManifestEntry* find(const std::string& id) const;

  nlohmann::json to_json() const;
  static DatasetManifest from_json(const nlohmann::json& j, std::filesystem::path root);

  // Loads `<dir>/manifest.json`, or the file itself when a .json path is given.
  static DatasetManifest load(const std::filesystem::path& path);
  void save(const std::filesystem::path& file) const;

  // Unique ids, every referenced file present, schema well-formed, and no
  // unpaired entry keeping both of its original garments.
  void validate() const;
};

}  // namespace wgv
