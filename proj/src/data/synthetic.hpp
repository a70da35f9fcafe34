#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "common/rng.hpp"
#include "data/manifest.hpp"
#include "data/types.hpp"

namespace wgv::synth {

using Color = std::array<float, 3>;

// All lengths below are in canonical units: a 64-row canvas with the body
// centered at column 0. Rendering maps them into the target raster.
struct BodySpec {
  double scale = 1.0;      // body size relative to canonical
  double shift_row = 0.0;  // canonical rows
  double shift_col = 0.0;
  // Arm abduction from vertical and elbow bend, in degrees (left, right).
  std::array<double, 2> arm_angle{25.0, 25.0};
  std::array<double, 2> elbow_bend{0.0, 0.0};
  std::array<double, 2> leg_angle{3.0, 3.0};
  Color skin{0.85f, 0.68f, 0.55f};
  Color hair{0.15f, 0.1f, 0.08f};
  Color shoes{0.2f, 0.2f, 0.22f};
  Color background{0.93f, 0.93f, 0.93f};
  bool long_hair = false;
};

struct TopSpec {
  double length = 32.0;        // canonical row of the untucked hem
  double sleeve_fraction = 0.3;  // 0 = sleeveless, 1 = to the wrist
  bool dress = false;
  double flare = 2.0;          // dress skirt widening at the hem
  Color color{0.2f, 0.4f, 0.8f};
  std::optional<Color> stripe;  // horizontal stripes when set
};

enum class BottomStyle { Pants, Shorts, Skirt };

struct BottomSpec {
  BottomStyle style = BottomStyle::Pants;
  double waist = 28.0;      // canonical row where the bottom starts
  double leg_fraction = 1.0;  // pants/shorts length along the leg
  double skirt_hem = 46.0;    // canonical row of a skirt hem
  Color color{0.2f, 0.25f, 0.45f};
};

struct FigureSpec {
  BodySpec body;
  TopSpec top;
  std::optional<BottomSpec> bottom;
  bool tucked = false;
};

struct RenderedFigure {
  std::vector<std::uint8_t> labels;
  ImageRGB image;
  PoseKeypoints keypoints;
};

// Canonical landmark rows.
inline constexpr double kWaistRow = 27.0;
inline constexpr double kCrotchRow = 37.0;

FigureSpec random_figure(Rng& rng, bool dress);
RenderedFigure render_figure(const FigureSpec& spec, Resolution res);
// Flat catalog photos on a white background in the canonical pose.
GarmentRecord render_top_catalog(const TopSpec& top, Resolution res);
GarmentRecord render_bottom_catalog(const BottomSpec& bottom, Resolution res);

// True for sample indices that wear a dress; ceil(0.15 n) of every prefix.
bool is_dress_index(std::int64_t index);

// Writes `count` samples plus catalog garments under out_dir and returns the
// manifest. Output is a pure function of (count, resolution, seed, split).
DatasetManifest gen_synthetic_dataset(int count, Resolution res, std::uint64_t seed,
                                      const std::filesystem::path& out_dir, Split split = Split::Train);

std::string sample_id(int index);

}  // namespace wgv::synth
