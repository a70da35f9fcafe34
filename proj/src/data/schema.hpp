#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace wgv {

inline constexpr int kNumClasses = 17;
inline constexpr int kNumKeypoints = 17;

// Human-parsing classes. The enumerator value is the label index stored in
// parsing PNGs and the channel index of a ParsingMap.
enum class Role : std::uint8_t {
  Background = 0,
  Hair,
  Face,
  Neck,
  TorsoSkin,
  LeftArm,
  RightArm,
  LeftHand,
  RightHand,
  TopTorso,
  TopSleeves,
  BottomHips,
  BottomLegs,
  LeftLegSkin,
  RightLegSkin,
  LeftFoot,
  RightFoot,
};

constexpr int index_of(Role r) noexcept { return static_cast<int>(r); }

// Roles kept verbatim by the wearing-agnostic preprocessing.
constexpr bool is_preserved(Role r) noexcept {
  return r == Role::Hair || r == Role::Face || r == Role::LeftHand || r == Role::RightHand ||
         r == Role::LeftFoot || r == Role::RightFoot;
}
constexpr bool is_top(Role r) noexcept { return r == Role::TopTorso || r == Role::TopSleeves; }
constexpr bool is_bottom(Role r) noexcept { return r == Role::BottomHips || r == Role::BottomLegs; }

inline constexpr std::array<Role, 4> kGarmentRoles{Role::TopTorso, Role::TopSleeves, Role::BottomHips,
                                                   Role::BottomLegs};

class LabelSchema {
 public:
  // The fixed 17-class schema used throughout the project.
  static const LabelSchema& standard();

  const std::vector<std::string>& class_names() const noexcept { return names_; }
  int size() const noexcept { return static_cast<int>(names_.size()); }
  Role role_of(int label) const;
  int index_of_name(std::string_view name) const;  // -1 when absent

  // Verifies 17 classes and that every required role resolves uniquely.
  void validate() const;

  // Stable FNV-1a over class names; embedded in checkpoints.
  std::uint64_t hash() const noexcept;

  // Fixed 17-color palette used for indexed parsing PNGs and overlays.
  static const std::array<std::array<std::uint8_t, 3>, kNumClasses>& palette();

  static LabelSchema from_names(std::vector<std::string> names);
  bool operator==(const LabelSchema&) const = default;

 private:
  std::vector<std::string> names_;
};

}  // namespace wgv
