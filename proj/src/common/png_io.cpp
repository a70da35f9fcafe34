#include "common/png_io.hpp"

#include <png.h>

#include <cstring>
#include <fstream>
#include <iterator>

#include "common/error.hpp"

namespace wgv::png {
namespace {

void on_png_error(png_structp ptr, png_const_charp msg) {
  auto* text = static_cast<std::string*>(png_get_error_ptr(ptr));
  if (text) *text = msg;
  png_longjmp(ptr, 1);
}

void on_png_warning(png_structp, png_const_charp) {}

void append_bytes(png_structp ptr, png_bytep data, png_size_t len) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(ptr));
  out->insert(out->end(), data, data + len);
}

void flush_noop(png_structp) {}

struct ReadCursor {
  const std::vector<std::uint8_t>* bytes;
  std::size_t offset;
};

void read_bytes(png_structp ptr, png_bytep out, png_size_t len) {
  auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(ptr));
  if (cur->offset + len > cur->bytes->size()) png_error(ptr, "unexpected end of PNG data");
  std::memcpy(out, cur->bytes->data() + cur->offset, len);
  cur->offset += len;
}

std::vector<std::uint8_t> encode(int width, int height, int color_type, int channels,
                                 const std::vector<std::uint8_t>& pixels, const Palette* palette) {
  std::vector<std::uint8_t> out;
  std::string err;
  png_structp ptr = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, on_png_error, on_png_warning);
  if (!ptr) fail(ErrorCode::IoError, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(ptr);
  std::vector<png_color> pal;
  if (setjmp(png_jmpbuf(ptr))) {
    png_destroy_write_struct(&ptr, &info);
    fail(ErrorCode::IoError, "PNG encode failed: " + err);
  }
  png_set_write_fn(ptr, &out, append_bytes, flush_noop);
  png_set_IHDR(ptr, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  if (palette) {
    for (const auto& c : *palette) pal.push_back(png_color{c[0], c[1], c[2]});
    png_set_PLTE(ptr, info, pal.data(), static_cast<int>(pal.size()));
  }
  png_write_info(ptr, info);
  const std::size_t stride = static_cast<std::size_t>(width) * channels;
  for (int r = 0; r < height; ++r)
    png_write_row(ptr, const_cast<png_bytep>(pixels.data() + r * stride));
  png_write_end(ptr, nullptr);
  png_destroy_write_struct(&ptr, &info);
  return out;
}

}  // namespace

std::vector<std::uint8_t> encode_rgb(int width, int height, const std::vector<std::uint8_t>& rgb) {
  if (rgb.size() != static_cast<std::size_t>(width) * height * 3)
    fail(ErrorCode::ShapeMismatch, "RGB buffer size does not match dimensions");
  return encode(width, height, PNG_COLOR_TYPE_RGB, 3, rgb, nullptr);
}

std::vector<std::uint8_t> encode_indexed(int width, int height, const std::vector<std::uint8_t>& indices,
                                         const Palette& palette) {
  if (indices.size() != static_cast<std::size_t>(width) * height)
    fail(ErrorCode::ShapeMismatch, "index buffer size does not match dimensions");
  if (palette.empty() || palette.size() > 256) fail(ErrorCode::InvalidArgument, "palette must hold 1..256 colors");
  return encode(width, height, PNG_COLOR_TYPE_PALETTE, 1, indices, &palette);
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::IoError, "write failed for '" + path.string() + "'");
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

DecodedImage decode(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0)
    fail(ErrorCode::CorruptFile, "not a PNG stream");
  std::string err;
  png_structp ptr = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, on_png_error, on_png_warning);
  if (!ptr) fail(ErrorCode::CorruptFile, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(ptr);
  ReadCursor cursor{&bytes, 0};
  DecodedImage img;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(ptr))) {
    png_destroy_read_struct(&ptr, &info, nullptr);
    fail(ErrorCode::CorruptFile, "PNG decode failed: " + err);
  }
  png_set_read_fn(ptr, &cursor, read_bytes);
  png_read_info(ptr, info);
  const int bit_depth = png_get_bit_depth(ptr, info);
  const int color = png_get_color_type(ptr, info);
  if (bit_depth != 8) png_error(ptr, "only 8-bit PNGs are supported");
  int channels = 0;
  switch (color) {
    case PNG_COLOR_TYPE_RGB: img.kind = PixelKind::Rgb; channels = 3; break;
    case PNG_COLOR_TYPE_RGB_ALPHA:
      png_set_strip_alpha(ptr);
      img.kind = PixelKind::Rgb;
      channels = 3;
      break;
    case PNG_COLOR_TYPE_PALETTE: img.kind = PixelKind::Indexed; channels = 1; break;
    case PNG_COLOR_TYPE_GRAY: img.kind = PixelKind::Gray; channels = 1; break;
    default: png_error(ptr, "unsupported PNG color type");
  }
  png_read_update_info(ptr, info);
  img.width = static_cast<int>(png_get_image_width(ptr, info));
  img.height = static_cast<int>(png_get_image_height(ptr, info));
  img.bytes.resize(static_cast<std::size_t>(img.width) * img.height * channels);
  rows.resize(img.height);
  for (int r = 0; r < img.height; ++r) rows[r] = img.bytes.data() + static_cast<std::size_t>(r) * img.width * channels;
  png_read_image(ptr, rows.data());
  png_read_end(ptr, nullptr);
  png_destroy_read_struct(&ptr, &info, nullptr);
  return img;
}

DecodedImage read(const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes;
  try {
    bytes = read_file(path);
  } catch (const Error& e) {
    fail(ErrorCode::CorruptFile, e.what());
  }
  return decode(bytes);
}

std::vector<std::uint8_t> encode_image(const ImageRGB& image) {
  const int n = image.resolution().pixels();
  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(n) * 3);
  for (int p = 0; p < n; ++p)
    for (int ch = 0; ch < 3; ++ch) rgb[p * 3 + ch] = to_byte(image.data()[static_cast<std::size_t>(ch) * n + p]);
  return encode_rgb(image.width(), image.height(), rgb);
}

ImageRGB decode_image(const std::vector<std::uint8_t>& bytes) {
  const DecodedImage d = decode(bytes);
  if (d.kind == PixelKind::Indexed) fail(ErrorCode::CorruptFile, "expected an RGB image, got a palette PNG");
  ImageRGB out(Resolution{d.height, d.width});
  const int n = d.width * d.height;
  for (int p = 0; p < n; ++p)
    for (int ch = 0; ch < 3; ++ch)
      out.data()[static_cast<std::size_t>(ch) * n + p] =
          from_byte(d.kind == PixelKind::Rgb ? d.bytes[p * 3 + ch] : d.bytes[p]);
  return out;
}

}  // namespace wgv::png
