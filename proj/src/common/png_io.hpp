#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "common/raster.hpp"

namespace wgv::png {

enum class PixelKind { Rgb, Indexed, Gray };

struct DecodedImage {
  int width = 0;
  int height = 0;
  PixelKind kind = PixelKind::Rgb;
  // Interleaved RGB bytes, or one byte per pixel (palette index / gray level).
  std::vector<std::uint8_t> bytes;
};

using Palette = std::vector<std::array<std::uint8_t, 3>>;

std::vector<std::uint8_t> encode_rgb(int width, int height, const std::vector<std::uint8_t>& rgb);
std::vector<std::uint8_t> encode_indexed(int width, int height, const std::vector<std::uint8_t>& indices,
                                         const Palette& palette);

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

// Throws CorruptFile on malformed input. 8-bit RGB/RGBA/gray/palette only.
DecodedImage decode(const std::vector<std::uint8_t>& bytes);
DecodedImage read(const std::filesystem::path& path);

// 8-bit RGB PNG of a planar image.
std::vector<std::uint8_t> encode_image(const ImageRGB& image);
// RGB (or gray, replicated) PNG into a planar image. Throws CorruptFile.
ImageRGB decode_image(const std::vector<std::uint8_t>& bytes);

}  // namespace wgv::png
