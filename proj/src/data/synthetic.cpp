#include "data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "common/error.hpp"
#include "common/png_io.hpp"
#include "data/pose_io.hpp"

namespace wgv::synth {
namespace {

namespace fs = std::filesystem;

constexpr double kPi = 3.14159265358979323846;

struct Vec2 {
  double row = 0.0;
  double col = 0.0;
  Vec2 operator+(Vec2 o) const { return {row + o.row, col + o.col}; }
  Vec2 operator-(Vec2 o) const { return {row - o.row, col - o.col}; }
  Vec2 operator*(double k) const { return {row * k, col * k}; }
};

double dot(Vec2 a, Vec2 b) { return a.row * b.row + a.col * b.col; }
double norm(Vec2 a) { return std::sqrt(dot(a, a)); }

double segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  double t = len2 > 0 ? dot(p - a, ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return norm(p - (a + ab * t));
}

bool in_polygon(Vec2 p, const std::vector<Vec2>& poly) {
  bool inside = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Vec2 a = poly[i];
    const Vec2 b = poly[j];
    if ((a.row > p.row) != (b.row > p.row)) {
      const double col = a.col + (p.row - a.row) * (b.col - a.col) / (b.row - a.row);
      if (p.col < col) inside = !inside;
    }
  }
  return inside;
}

// Maps canonical coordinates onto a raster and back.
struct Frame {
  double s = 1.0;
  double k = 1.0;
  double shift_row = 0.0;
  double shift_col = 0.0;
  double half_width = 24.0;

  Frame(Resolution res, const BodySpec& body)
      : s(res.height / 64.0), k(body.scale), shift_row(body.shift_row), shift_col(body.shift_col),
        half_width(res.width / 2.0) {}

  Vec2 to_pixel(Vec2 c) const {
    return {s * (32.0 + k * (c.row - 32.0) + shift_row), half_width + s * (k * c.col + shift_col)};
  }
  Vec2 to_canonical(Vec2 p) const {
    return {(p.row / s - 32.0 - shift_row) / k + 32.0, ((p.col - half_width) / s - shift_col) / k};
  }
};

// Posed skeleton in canonical units. side index 0 = person's left (image right).
struct Skeleton {
  std::array<Vec2, 2> shoulder, elbow, wrist, hand, hip, knee, ankle, foot;
  std::array<Vec2, 2> upper_dir, fore_dir;

  explicit Skeleton(const BodySpec& b) {
    for (int side = 0; side < 2; ++side) {
      const double sign = side == 0 ? 1.0 : -1.0;
      const double a = b.arm_angle[side] * kPi / 180.0;
      const double e = (b.arm_angle[side] + b.elbow_bend[side]) * kPi / 180.0;
      upper_dir[side] = {std::cos(a), sign * std::sin(a)};
      fore_dir[side] = {std::cos(e), sign * std::sin(e)};
      shoulder[side] = {15.0, sign * 7.0};
      elbow[side] = shoulder[side] + upper_dir[side] * 10.0;
      wrist[side] = elbow[side] + fore_dir[side] * 8.5;
      hand[side] = wrist[side] + fore_dir[side] * 1.6;
      const double l = b.leg_angle[side] * kPi / 180.0;
      const Vec2 leg_dir{std::cos(l), sign * std::sin(l)};
      hip[side] = {34.5, sign * 3.4};
      knee[side] = hip[side] + leg_dir * 12.0;
      ankle[side] = knee[side] + leg_dir * 11.5;
      foot[side] = ankle[side] + Vec2{1.8, sign * 1.3};
    }
  }

  // Distance from p to the arm polyline truncated at `length` units from the shoulder.
  double arm_distance(Vec2 p, int side, double length) const {
    const double upper = 10.0;
    const double fore = 8.5;
    if (length <= 0.0) return 1e9;
    const Vec2 start = shoulder[side] - upper_dir[side] * 1.0;
    if (length <= upper) return segment_distance(p, start, shoulder[side] + upper_dir[side] * length);
    const double d1 = segment_distance(p, start, elbow[side]);
    const double d2 = segment_distance(p, elbow[side], elbow[side] + fore_dir[side] * std::min(length - upper, fore));
    return std::min(d1, d2);
  }

  double leg_distance(Vec2 p, int side, double length, double radius_upper, double radius_lower) const {
    const double upper = 12.0;
    if (length <= 0.0) return 1e9;
    const Vec2 dir = (knee[side] - hip[side]) * (1.0 / upper);
    const Vec2 start = hip[side] - Vec2{2.0, 0.0};
    if (length <= upper)
      return segment_distance(p, start, hip[side] + dir * length) - radius_upper;
    const double d1 = segment_distance(p, start, knee[side]) - radius_upper;
    const Vec2 ldir = (ankle[side] - knee[side]) * (1.0 / 11.5);
    const double d2 = segment_distance(p, knee[side], knee[side] + ldir * std::min(length - upper, 11.5)) - radius_lower;
    return std::min(d1, d2);
  }
};

const std::vector<Vec2>& trunk_polygon() {
  static const std::vector<Vec2> poly{{13.5, -7.4},       {13.5, 7.4},        {17.0, 7.6},        {kWaistRow, 5.6},
                                      {kCrotchRow, 6.5}, {kCrotchRow, -6.5}, {kWaistRow, -5.6}, {17.0, -7.6}};
  return poly;
}

bool in_trunk(Vec2 c) { return in_polygon(c, trunk_polygon()); }

bool in_skirt(Vec2 c, double hem, double flare) {
  if (c.row < kCrotchRow - 0.5 || c.row > hem) return false;
  const double t = (c.row - kCrotchRow) / std::max(1.0, hem - kCrotchRow);
  return std::abs(c.col) <= 6.5 + flare * std::max(0.0, t);
}

constexpr double kArmLength = 18.5;
constexpr double kLegLength = 23.5;

bool in_sleeve(const Skeleton& sk, Vec2 c, double fraction) {
  if (fraction <= 0.0) return false;
  for (int side = 0; side < 2; ++side)
    if (sk.arm_distance(c, side, fraction * kArmLength + 1.0) <= 2.3) return true;
  return false;
}

bool in_bottom_legs(const Skeleton& sk, Vec2 c, const BottomSpec& b) {
  if (b.style == BottomStyle::Skirt) return in_skirt(c, b.skirt_hem, 0.25 * (b.skirt_hem - kCrotchRow));
  if (c.row < kCrotchRow - 1.0) return false;
  for (int side = 0; side < 2; ++side)
    if (sk.leg_distance(c, side, b.leg_fraction * kLegLength, 3.1, 2.8) <= 0.0) return true;
  return false;
}

bool in_bottom_hips(Vec2 c, const BottomSpec& b) { return c.row >= b.waist && in_trunk(c); }

bool in_top_torso(Vec2 c, const TopSpec& t, double hem) {
  if (c.row > hem) return false;
  if (in_trunk(c)) return true;
  return t.dress && in_skirt(c, hem, t.flare);
}

Color top_color(const TopSpec& t, Vec2 c) {
  if (t.stripe && static_cast<int>(std::floor(c.row / 3.0)) % 2 != 0) return *t.stripe;
  return t.color;
}

Color random_color(Rng& rng, float lo = 0.05f, float hi = 0.95f) {
  return {static_cast<float>(rng.uniform(lo, hi)), static_cast<float>(rng.uniform(lo, hi)),
          static_cast<float>(rng.uniform(lo, hi))};
}

void put_color(ImageRGB& img, int r, int c, const Color& col) {
  for (int ch = 0; ch < 3; ++ch) img.at(ch, r, c) = std::clamp(col[ch], 0.0f, 1.0f);
}

Keypoint make_keypoint(const Frame& f, Vec2 canonical, Resolution res) {
  const Vec2 p = f.to_pixel(canonical);
  Keypoint k;
  k.row = std::clamp(static_cast<int>(std::floor(p.row)), 0, res.height - 1);
  k.col = std::clamp(static_cast<int>(std::floor(p.col)), 0, res.width - 1);
  k.visible = true;
  return k;
}

std::vector<std::uint8_t> to_bytes(const ImageRGB& img) {
  const int n = img.resolution().pixels();
  std::vector<std::uint8_t> out(static_cast<std::size_t>(n) * 3);
  for (int p = 0; p < n; ++p)
    for (int ch = 0; ch < 3; ++ch) out[p * 3 + ch] = to_byte(img.data()[static_cast<std::size_t>(ch) * n + p]);
  return out;
}

png::Palette parsing_palette() {
  png::Palette pal;
  for (const auto& c : LabelSchema::palette()) pal.push_back(c);
  return pal;
}

png::Palette garment_palette() { return {{0, 0, 0}, {255, 255, 255}, {128, 128, 128}}; }

void write_garment(const fs::path& image_path, const fs::path& seg_path, const GarmentRecord& g) {
  const Resolution res = g.image.resolution();
  png::write_file(image_path, png::encode_rgb(res.width, res.height, to_bytes(g.image)));
  png::write_file(seg_path, png::encode_indexed(res.width, res.height, g.seg, garment_palette()));
}

}  // namespace

std::string sample_id(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "s%05d", index);
  return buf;
}

bool is_dress_index(std::int64_t index) {
  auto dresses = [](std::int64_t n) { return (15 * n + 99) / 100; };
  return dresses(index + 1) > dresses(index);
}

FigureSpec random_figure(Rng& rng, bool dress) {
  static const std::array<Color, 4> skins{{{0.95f, 0.80f, 0.69f}, {0.85f, 0.66f, 0.52f},
                                           {0.63f, 0.45f, 0.33f}, {0.42f, 0.29f, 0.21f}}};
  FigureSpec f;
  BodySpec& b = f.body;
  b.scale = rng.uniform(0.93, 1.03);
  b.shift_row = rng.uniform(-1.5, 1.5);
  b.shift_col = rng.uniform(-3.0, 3.0);
  for (int side = 0; side < 2; ++side) {
    b.arm_angle[side] = rng.uniform(8.0, 50.0);
    b.elbow_bend[side] = rng.uniform(0.0, 40.0);
    b.leg_angle[side] = rng.uniform(0.0, 9.0);
  }
  b.skin = skins[rng.uniform_int(0, 3)];
  for (auto& v : b.skin) v = std::clamp(v + static_cast<float>(rng.uniform(-0.04, 0.04)), 0.0f, 1.0f);
  b.hair = random_color(rng, 0.02f, 0.35f);
  b.shoes = random_color(rng, 0.05f, 0.3f);
  const float gray = static_cast<float>(rng.uniform(0.82, 0.97));
  for (auto& v : b.background) v = std::clamp(gray + static_cast<float>(rng.uniform(-0.03, 0.03)), 0.0f, 1.0f);
  b.long_hair = rng.chance(0.4);

  TopSpec& t = f.top;
  t.color = random_color(rng);
  if (rng.chance(0.3)) t.stripe = random_color(rng);
  const double sleeve_pick = rng.uniform();
  t.sleeve_fraction = sleeve_pick < 0.2 ? 0.0 : (sleeve_pick < 0.6 ? rng.uniform(0.15, 0.3) : rng.uniform(0.9, 1.0));
  t.dress = dress;
  if (dress) {
    t.length = rng.uniform(42.0, 53.0);
    t.flare = rng.uniform(1.0, 4.0);
    f.tucked = false;
    return f;
  }

  BottomSpec bt;
  bt.waist = rng.uniform(25.5, 30.5);
  const double style = rng.uniform();
  if (style < 0.45) {
    bt.style = BottomStyle::Pants;
    bt.leg_fraction = rng.chance(0.7) ? 1.0 : rng.uniform(0.7, 0.85);
  } else if (style < 0.7) {
    bt.style = BottomStyle::Shorts;
    bt.leg_fraction = rng.uniform(0.3, 0.45);
  } else {
    bt.style = BottomStyle::Skirt;
    bt.skirt_hem = rng.uniform(41.0, 52.0);
  }
  bt.color = rng.chance(0.3) ? Color{static_cast<float>(rng.uniform(0.1, 0.3)), static_cast<float>(rng.uniform(0.2, 0.35)),
                                     static_cast<float>(rng.uniform(0.45, 0.7))}
                             : random_color(rng);
  f.bottom = bt;
  t.length = rng.uniform(bt.waist + 3.0, kCrotchRow - 1.0);
  f.tucked = rng.chance(0.5);
  return f;
}

RenderedFigure render_figure(const FigureSpec& spec, Resolution res) {
  res.validate();
  const Frame frame(res, spec.body);
  const Skeleton sk(spec.body);
  const BodySpec& b = spec.body;
  const double hem = spec.tucked && spec.bottom ? spec.bottom->waist - 1e-9 : spec.top.length;

  RenderedFigure out;
  out.labels.assign(res.pixels(), index_of(Role::Background));
  out.image = ImageRGB(res);
  for (int r = 0; r < res.height; ++r) {
    for (int c = 0; c < res.width; ++c) {
      const Vec2 p = frame.to_canonical({r + 0.5, c + 0.5});
      Role role = Role::Background;
      Color color = b.background;
      auto paint = [&](Role rl, const Color& col) {
        role = rl;
        color = col;
      };
      const double head = norm(p - Vec2{7.2, 0.0});
      if (b.long_hair && p.row >= 7.0 && p.row <= 18.0 && std::abs(p.col) >= 2.5 && std::abs(p.col) <= 5.4)
        paint(Role::Hair, b.hair);
      for (int side = 0; side < 2; ++side) {
        const Role leg = side == 0 ? Role::LeftLegSkin : Role::RightLegSkin;
        if (sk.leg_distance(p, side, kLegLength + 1.0, 2.7, 2.3) <= 0.0) paint(leg, b.skin);
      }
      if (in_trunk(p)) paint(Role::TorsoSkin, b.skin);
      if (p.row >= 10.5 && p.row <= 14.5 && std::abs(p.col) <= 1.8) paint(Role::Neck, b.skin);
      for (int side = 0; side < 2; ++side) {
        const Role arm = side == 0 ? Role::LeftArm : Role::RightArm;
        if (sk.arm_distance(p, side, kArmLength) <= 1.8) paint(arm, b.skin);
      }
      if (spec.bottom) {
        if (in_bottom_legs(sk, p, *spec.bottom)) paint(Role::BottomLegs, spec.bottom->color);
        if (in_bottom_hips(p, *spec.bottom)) paint(Role::BottomHips, spec.bottom->color);
      }
      if (in_sleeve(sk, p, spec.top.sleeve_fraction)) paint(Role::TopSleeves, top_color(spec.top, p));
      if (in_top_torso(p, spec.top, hem)) paint(Role::TopTorso, top_color(spec.top, p));
      for (int side = 0; side < 2; ++side) {
        const Vec2 d = p - sk.foot[side];
        if ((d.row * d.row) / (1.4 * 1.4) + (d.col * d.col) / (2.4 * 2.4) <= 1.0)
          paint(side == 0 ? Role::LeftFoot : Role::RightFoot, b.shoes);
        if (norm(p - sk.hand[side]) <= 1.9) paint(side == 0 ? Role::LeftHand : Role::RightHand, b.skin);
      }
      if (head <= 4.4) paint(Role::Face, b.skin);
      if (head <= 4.9 && (p.row < 6.0 || (std::abs(p.col) >= 3.3 && p.row < 8.5))) paint(Role::Hair, b.hair);

      out.labels[static_cast<std::size_t>(r) * res.width + c] = index_of(role);
      put_color(out.image, r, c, color);
    }
  }

  auto kp = [&](KeypointId id, Vec2 c) { out.keypoints[id] = make_keypoint(frame, c, res); };
  kp(KeypointId::Nose, {8.0, 0.0});
  kp(KeypointId::LeftEye, {6.3, 1.6});
  kp(KeypointId::RightEye, {6.3, -1.6});
  kp(KeypointId::LeftEar, {7.0, 4.2});
  kp(KeypointId::RightEar, {7.0, -4.2});
  kp(KeypointId::LeftShoulder, sk.shoulder[0]);
  kp(KeypointId::RightShoulder, sk.shoulder[1]);
  kp(KeypointId::LeftElbow, sk.elbow[0]);
  kp(KeypointId::RightElbow, sk.elbow[1]);
  kp(KeypointId::LeftWrist, sk.wrist[0]);
  kp(KeypointId::RightWrist, sk.wrist[1]);
  kp(KeypointId::LeftHip, sk.hip[0]);
  kp(KeypointId::RightHip, sk.hip[1]);
  kp(KeypointId::LeftKnee, sk.knee[0]);
  kp(KeypointId::RightKnee, sk.knee[1]);
  kp(KeypointId::LeftAnkle, sk.ankle[0]);
  kp(KeypointId::RightAnkle, sk.ankle[1]);
  return out;
}

GarmentRecord render_top_catalog(const TopSpec& top, Resolution res) {
  res.validate();
  const BodySpec canonical;
  const Frame frame(res, canonical);
  const Skeleton sk(canonical);
  GarmentRecord g = empty_garment(res, GarmentKind::Top);
  for (int r = 0; r < res.height; ++r) {
    for (int c = 0; c < res.width; ++c) {
      const Vec2 p = frame.to_canonical({r + 0.5, c + 0.5});
      GarmentPart part = GarmentPart::Background;
      if (in_sleeve(sk, p, top.sleeve_fraction)) part = GarmentPart::Secondary;
      if (in_top_torso(p, top, top.length)) part = GarmentPart::Main;
      if (part == GarmentPart::Background) continue;
      g.seg[static_cast<std::size_t>(r) * res.width + c] = static_cast<std::uint8_t>(part);
      put_color(g.image, r, c, top_color(top, p));
    }
  }
  return g;
}

GarmentRecord render_bottom_catalog(const BottomSpec& bottom, Resolution res) {
  res.validate();
  const BodySpec canonical;
  const Frame frame(res, canonical);
  const Skeleton sk(canonical);
  GarmentRecord g = empty_garment(res, GarmentKind::Bottom);
  for (int r = 0; r < res.height; ++r) {
    for (int c = 0; c < res.width; ++c) {
      const Vec2 p = frame.to_canonical({r + 0.5, c + 0.5});
      GarmentPart part = GarmentPart::Background;
      if (in_bottom_legs(sk, p, bottom)) part = GarmentPart::Secondary;
      if (in_bottom_hips(p, bottom)) part = GarmentPart::Main;
      if (part == GarmentPart::Background) continue;
      g.seg[static_cast<std::size_t>(r) * res.width + c] = static_cast<std::uint8_t>(part);
      put_color(g.image, r, c, bottom.color);
    }
  }
  return g;
}

DatasetManifest gen_synthetic_dataset(int count, Resolution res, std::uint64_t seed, const fs::path& out_dir,
                                      Split split) {
  if (count < 0) fail(ErrorCode::InvalidArgument, "sample count must be non-negative");
  res.validate();

  DatasetManifest manifest;
  manifest.resolution = res;
  manifest.split = split;
  manifest.root = out_dir;
  try {
    fs::create_directories(out_dir);
    if (count > 0)
      for (const char* sub : {"models", "parsing", "pose", "tops", "tops_seg", "bottoms", "bottoms_seg"})
        fs::create_directories(out_dir / sub);
  } catch (const fs::filesystem_error& e) {
    fail(ErrorCode::IoError, std::string("cannot create dataset directory: ") + e.what());
  }

  const png::Palette palette = parsing_palette();
  for (int i = 0; i < count; ++i) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(i)));
    const FigureSpec spec = random_figure(rng, is_dress_index(i));
    const RenderedFigure fig = render_figure(spec, res);
    const std::string id = sample_id(i);

    png::write_file(manifest.model_path(id), png::encode_rgb(res.width, res.height, to_bytes(fig.image)));
    png::write_file(manifest.parsing_path(id), png::encode_indexed(res.width, res.height, fig.labels, palette));
    save_keypoints(manifest.pose_path(id), fig.keypoints);
    write_garment(manifest.top_path(id), manifest.top_seg_path(id), render_top_catalog(spec.top, res));

    ManifestEntry entry;
    entry.id = id;
    entry.top_id = id;
    if (spec.bottom) {
      write_garment(manifest.bottom_path(id), manifest.bottom_seg_path(id), render_bottom_catalog(*spec.bottom, res));
      entry.bottom_id = id;
    }
    manifest.samples.push_back(std::move(entry));
  }
  manifest.save(out_dir / "manifest.json");
  return manifest;
}

}  // namespace wgv::synth
