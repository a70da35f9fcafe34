#include "common/raster.hpp"

#include <cstdio>
#include <sstream>

#include "common/error.hpp"

namespace wgv {

void Resolution::validate() const {
  if (height <= 0 || width <= 0)
    fail(ErrorCode::InvalidResolution, "resolution must be positive, got " + to_string());
  if (height * 3 != width * 4)
    fail(ErrorCode::InvalidResolution, "resolution must be 4:3 (HxW), got " + to_string());
}

std::string Resolution::to_string() const {
  return std::to_string(height) + "x" + std::to_string(width);
}

Resolution Resolution::parse(const std::string& text) {
  Resolution r;
  char sep = 0;
  std::istringstream in(text);
  if (!(in >> r.height >> sep >> r.width) || (sep != 'x' && sep != 'X') || !in.eof())
    fail(ErrorCode::InvalidResolution, "cannot parse resolution '" + text + "', expected HxW");
  r.validate();
  return r;
}

void ImageRGB::validate() const {
  if (data_.size() != static_cast<std::size_t>(3) * res_.pixels())
    fail(ErrorCode::ShapeMismatch, "image buffer does not match resolution " + res_.to_string());
  for (float v : data_)
    if (!(v >= 0.0f && v <= 1.0f)) fail(ErrorCode::InvalidArgument, "image value outside [0,1]");
}

}  // namespace wgv
