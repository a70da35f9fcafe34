#include "data/schema.hpp"

#include <algorithm>

#include "common/error.hpp"

namespace wgv {
namespace {

const std::array<const char*, kNumClasses> kNames{
    "background", "hair",        "face",        "neck",          "torso-skin",     "left-arm",
    "right-arm",  "left-hand",   "right-hand",  "top-torso",     "top-sleeves",    "bottom-hips",
    "bottom-legs", "left-leg-skin", "right-leg-skin", "left-foot", "right-foot"};

}  // namespace

const LabelSchema& LabelSchema::standard() {
  static const LabelSchema schema = [] {
    LabelSchema s;
    for (const char* n : kNames) s.names_.emplace_back(n);
    return s;
  }();
  return schema;
}

LabelSchema LabelSchema::from_names(std::vector<std::string> names) {
  LabelSchema s;
  s.names_ = std::move(names);
  return s;
}

Role LabelSchema::role_of(int label) const {
  if (label < 0 || label >= kNumClasses)
    fail(ErrorCode::SchemaMismatch, "label index " + std::to_string(label) + " outside the 17-class schema");
  return static_cast<Role>(label);
}

int LabelSchema::index_of_name(std::string_view name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  return it == names_.end() ? -1 : static_cast<int>(it - names_.begin());
}

void LabelSchema::validate() const {
  if (size() != kNumClasses)
    fail(ErrorCode::SchemaMismatch, "schema has " + std::to_string(size()) + " classes, expected 17");
  for (int i = 0; i < kNumClasses; ++i) {
    if (std::count(names_.begin(), names_.end(), kNames[i]) != 1)
      fail(ErrorCode::SchemaMismatch, std::string("role '") + kNames[i] + "' missing or duplicated");
    if (names_[i] != kNames[i])
      fail(ErrorCode::SchemaMismatch, "class order differs from the standard schema at index " + std::to_string(i));
  }
}

std::uint64_t LabelSchema::hash() const noexcept {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& n : names_) {
    for (unsigned char ch : n) {
      h ^= ch;
      h *= 0x100000001b3ull;
    }
    h ^= 0xff;
    h *= 0x100000001b3ull;
  }
  return h;
}

const std::array<std::array<std::uint8_t, 3>, kNumClasses>& LabelSchema::palette() {
  static const std::array<std::array<std::uint8_t, 3>, kNumClasses> colors{{
      {0, 0, 0},       {128, 0, 0},   {255, 200, 150}, {200, 150, 100}, {170, 110, 70}, {0, 128, 0},
      {0, 200, 0},     {128, 128, 0}, {200, 200, 0},   {0, 0, 255},     {0, 128, 255},  {255, 0, 0},
      {255, 128, 0},   {128, 0, 128}, {200, 0, 200},   {0, 128, 128},   {0, 200, 200},
  }};
  return colors;
}

}  // namespace wgv
