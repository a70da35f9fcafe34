#include "data/manifest.hpp"

#include <fstream>
#include <set>

#include "common/error.hpp"

namespace wgv {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::TestPair: return "test_pair";
    case Split::TestUnpair: return "test_unpair";
  }
  return "train";
}

Split parse_split(const std::string& text) {
  if (text == "train") return Split::Train;
  if (text == "test_pair") return Split::TestPair;
  if (text == "test_unpair") return Split::TestUnpair;
  fail(ErrorCode::InvalidArgument, "unknown split '" + text + "' (train, test_pair, test_unpair)");
}

const ManifestEntry* DatasetManifest::find(const std::string& id) const {
  for (const auto& e : samples)
    if (e.id == id) return &e;
  return nullptr;
}

json DatasetManifest::to_json() const {
  json j;
  j["schema"] = schema.class_names();
  j["resolution"] = {{"height", resolution.height}, {"width", resolution.width}};
  j["split"] = to_string(split);
  json arr = json::array();
  for (const auto& e : samples) {
    json s;
    s["id"] = e.id;
    s["top_id"] = e.top_id;
    s["bottom_id"] = e.bottom_id ? json(*e.bottom_id) : json(nullptr);
    if (e.has_original) {
      s["original_top_id"] = e.original_top_id ? json(*e.original_top_id) : json(nullptr);
      s["original_bottom_id"] = e.original_bottom_id ? json(*e.original_bottom_id) : json(nullptr);
    }
    arr.push_back(std::move(s));
  }
  j["samples"] = std::move(arr);
  return j;
}

DatasetManifest DatasetManifest::from_json(const json& j, fs::path root) {
  DatasetManifest m;
  m.root = std::move(root);
  try {
    m.schema = LabelSchema::from_names(j.at("schema").get<std::vector<std::string>>());
    const auto& res = j.at("resolution");
    m.resolution = Resolution{res.at("height").get<int>(), res.at("width").get<int>()};
    m.split = parse_split(j.at("split").get<std::string>());
    for (const auto& s : j.at("samples")) {
      ManifestEntry e;
      e.id = s.at("id").get<std::string>();
      e.top_id = s.at("top_id").get<std::string>();
      if (!s.at("bottom_id").is_null()) e.bottom_id = s.at("bottom_id").get<std::string>();
      if (s.contains("original_top_id")) {
        e.has_original = true;
        if (!s["original_top_id"].is_null()) e.original_top_id = s["original_top_id"].get<std::string>();
        if (s.contains("original_bottom_id") && !s["original_bottom_id"].is_null())
          e.original_bottom_id = s["original_bottom_id"].get<std::string>();
      }
      m.samples.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::CorruptFile, std::string("malformed manifest: ") + e.what());
  }
  m.resolution.validate();
  m.schema.validate();
  return m;
}

DatasetManifest DatasetManifest::load(const fs::path& path) {
  const fs::path file = fs::is_directory(path) ? path / "manifest.json" : path;
  std::ifstream in(file);
  if (!in) fail(ErrorCode::IoError, "cannot open manifest '" + file.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(ErrorCode::CorruptFile, "manifest '" + file.string() + "' is not valid JSON: " + e.what());
  }
  return from_json(j, file.parent_path());
}

void DatasetManifest::save(const fs::path& file) const {
  std::ofstream out(file, std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write manifest '" + file.string() + "'");
  out << to_json().dump(2) << '\n';
  if (!out) fail(ErrorCode::IoError, "write failed for '" + file.string() + "'");
}

void DatasetManifest::validate() const {
  schema.validate();
  resolution.validate();
  std::set<std::string> seen;
  auto need = [](const fs::path& p) {
    if (!fs::exists(p)) fail(ErrorCode::IoError, "missing dataset file '" + p.string() + "'");
  };
  for (const auto& e : samples) {
    if (!seen.insert(e.id).second) fail(ErrorCode::InvalidArgument, "duplicate sample id '" + e.id + "'");
    need(model_path(e.id));
    need(parsing_path(e.id));
    need(pose_path(e.id));
    need(top_path(e.top_id));
    need(top_seg_path(e.top_id));
    if (e.bottom_id) {
      need(bottom_path(*e.bottom_id));
      need(bottom_seg_path(*e.bottom_id));
    }
    if (split == Split::TestUnpair && e.has_original && e.original_top_id == e.top_id &&
        e.original_bottom_id == e.bottom_id)
      fail(ErrorCode::InvalidArgument, "unpaired sample '" + e.id + "' keeps its original garments");
  }
}

}  // namespace wgv
