#include "data/loader.hpp"

#include <numeric>

#include "common/error.hpp"
#include "common/png_io.hpp"
#include "common/rng.hpp"
#include "data/pose_io.hpp"
#include "data/preprocess.hpp"

namespace wgv {
namespace {

png::DecodedImage read_checked(const std::filesystem::path& path, Resolution expected) {
  png::DecodedImage img = png::read(path);
  if (img.width != expected.width || img.height != expected.height)
    fail(ErrorCode::ShapeMismatch, "'" + path.string() + "' is " + std::to_string(img.height) + "x" +
                                       std::to_string(img.width) + ", expected " + expected.to_string());
  return img;
}

std::vector<std::uint8_t> read_labels(const std::filesystem::path& path, Resolution expected) {
  png::DecodedImage img = read_checked(path, expected);
  if (img.kind == png::PixelKind::Rgb)
    fail(ErrorCode::CorruptFile, "'" + path.string() + "' must be a single-channel label PNG");
  return std::move(img.bytes);
}

}  // namespace

ImageRGB load_image(const std::filesystem::path& path, Resolution expected) {
  png::DecodedImage img = read_checked(path, expected);
  if (img.kind != png::PixelKind::Rgb) fail(ErrorCode::CorruptFile, "'" + path.string() + "' is not an RGB PNG");
  ImageRGB out(expected);
  const int n = expected.pixels();
  for (int p = 0; p < n; ++p)
    for (int ch = 0; ch < 3; ++ch) out.data()[static_cast<std::size_t>(ch) * n + p] = from_byte(img.bytes[p * 3 + ch]);
  return out;
}

ParsingMap load_parsing(const DatasetManifest& manifest, const std::string& id) {
  if (manifest.schema.size() != kNumClasses)
    fail(ErrorCode::SchemaMismatch, "manifest schema has " + std::to_string(manifest.schema.size()) + " classes");
  const auto labels = read_labels(manifest.parsing_path(id), manifest.resolution);
  for (auto l : labels)
    if (l >= kNumClasses)
      fail(ErrorCode::SchemaMismatch, "parsing '" + id + "' uses label index " + std::to_string(l) +
                                          " outside the 17-class schema");
  return ParsingMap::from_labels(manifest.resolution, labels);
}

GarmentRecord load_garment(const DatasetManifest& manifest, const std::string& garment_id, GarmentKind kind) {
  const bool top = kind == GarmentKind::Top;
  GarmentRecord g;
  g.kind = kind;
  g.image = load_image(top ? manifest.top_path(garment_id) : manifest.bottom_path(garment_id), manifest.resolution);
  g.seg = read_labels(top ? manifest.top_seg_path(garment_id) : manifest.bottom_seg_path(garment_id),
                      manifest.resolution);
  g.validate();
  return g;
}

SampleRecord load_sample(const DatasetManifest& manifest, const std::string& id) {
  const ManifestEntry* entry = manifest.find(id);
  if (!entry) fail(ErrorCode::UnknownId, "sample id '" + id + "' not in manifest");

  SampleRecord s;
  s.id = id;
  s.model_image = load_image(manifest.model_path(id), manifest.resolution);
  s.parsing = load_parsing(manifest, id);
  s.keypoints = load_keypoints(manifest.pose_path(id));
  s.top = load_garment(manifest, entry->top_id, GarmentKind::Top);
  if (entry->bottom_id) s.bottom = load_garment(manifest, *entry->bottom_id, GarmentKind::Bottom);
  auto [img, parsing] = make_agnostic(s.model_image, s.parsing);
  s.agnostic_image = std::move(img);
  s.agnostic_parsing = std::move(parsing);
  s.validate();
  return s;
}

DatasetManifest make_unpaired_split(const DatasetManifest& manifest, std::uint64_t seed) {
  if (manifest.split != Split::TestPair)
    fail(ErrorCode::InvalidArgument, "unpaired split must be built from a test_pair manifest");
  const std::size_t n = manifest.samples.size();
  if (n < 2) fail(ErrorCode::TooFewSamples, "need at least 2 samples to remix garment pairings");

  auto same_pair = [&](std::size_t a, std::size_t b) {
    return manifest.samples[a].top_id == manifest.samples[b].top_id &&
           manifest.samples[a].bottom_id == manifest.samples[b].bottom_id;
  };

  std::vector<std::size_t> order(n);
  bool found = false;
  for (std::uint64_t attempt = 0; attempt < 10000 && !found; ++attempt) {
    std::iota(order.begin(), order.end(), 0);
    Rng rng(mix_seed(seed, attempt));
    for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_int(0, static_cast<int>(i))]);
    found = true;
    for (std::size_t i = 0; i < n && found; ++i) found = !same_pair(i, order[i]);
  }
  if (!found) fail(ErrorCode::TooFewSamples, "no garment remix avoids every original pairing");

  DatasetManifest out = manifest;
  out.split = Split::TestUnpair;
  for (std::size_t i = 0; i < n; ++i) {
    ManifestEntry& e = out.samples[i];
    const ManifestEntry& src = manifest.samples[order[i]];
    e.original_top_id = manifest.samples[i].top_id;
    e.original_bottom_id = manifest.samples[i].bottom_id;
    e.has_original = true;
    e.top_id = src.top_id;
    e.bottom_id = src.bottom_id;
  }
  return out;
}

}  // namespace wgv
