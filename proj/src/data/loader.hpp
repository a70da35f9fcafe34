#pragma once

#include <cstdint>
#include <string>

#include "data/manifest.hpp"
#include "data/types.hpp"

namespace wgv {

// Decodes one sample, re-derives its wearing-agnostic inputs and validates it.
SampleRecord load_sample(const DatasetManifest& manifest, const std::string& id);

GarmentRecord load_garment(const DatasetManifest& manifest, const std::string& garment_id, GarmentKind kind);
ParsingMap load_parsing(const DatasetManifest& manifest, const std::string& id);
ImageRGB load_image(const std::filesystem::path& path, Resolution expected);

// Seeded derangement of the garment pairs of a paired test split.
DatasetManifest make_unpaired_split(const DatasetManifest& manifest, std::uint64_t seed);

}  // namespace wgv
