#include "data/cache.hpp"

#include "data/loader.hpp"
#include "data/preprocess.hpp"

namespace wgv {
namespace {

std::vector<std::uint8_t> pack(const ImageRGB& img) {
  std::vector<std::uint8_t> out(img.data().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = to_byte(img.data()[i]);
  return out;
}

ImageRGB unpack(const std::vector<std::uint8_t>& bytes, Resolution res) {
  ImageRGB img(res);
  for (std::size_t i = 0; i < bytes.size(); ++i) img.data()[i] = from_byte(bytes[i]);
  return img;
}

}  // namespace

CompactSample CompactSample::from_record(const SampleRecord& s) {
  CompactSample c;
  c.id = s.id;
  c.res = s.resolution();
  c.model_rgb = pack(s.model_image);
  c.parsing = s.parsing.labels();
  c.keypoints = s.keypoints;
  c.top_rgb = pack(s.top.image);
  c.top_seg = s.top.seg;
  if (s.bottom) {
    c.has_bottom = true;
    c.bottom_rgb = pack(s.bottom->image);
    c.bottom_seg = s.bottom->seg;
  }
  return c;
}

SampleRecord CompactSample::expand() const {
  SampleRecord s;
  s.id = id;
  s.model_image = unpack(model_rgb, res);
  s.parsing = ParsingMap::from_labels(res, parsing);
  s.keypoints = keypoints;
  s.top.kind = GarmentKind::Top;
  s.top.image = unpack(top_rgb, res);
  s.top.seg = top_seg;
  if (has_bottom) {
    GarmentRecord b;
    b.kind = GarmentKind::Bottom;
    b.image = unpack(bottom_rgb, res);
    b.seg = bottom_seg;
    s.bottom = std::move(b);
  }
  auto [img, parsing] = make_agnostic(s.model_image, s.parsing);
  s.agnostic_image = std::move(img);
  s.agnostic_parsing = std::move(parsing);
  return s;
}

SampleCache SampleCache::load(const DatasetManifest& manifest) {
  SampleCache cache;
  cache.res_ = manifest.resolution;
  cache.samples_.reserve(manifest.samples.size());
  for (const auto& e : manifest.samples) cache.samples_.push_back(CompactSample::from_record(load_sample(manifest, e.id)));
  return cache;
}

}  // namespace wgv
