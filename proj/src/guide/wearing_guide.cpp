#include "guide/wearing_guide.hpp"

#include <algorithm>
#include <cmath>

#include "nn/loss_kernels.hpp"

namespace wgv {

std::optional<int> WearingGuideMask::hem_row() const {
  int hem = -1;
  for (int r = 0; r < res_.height; ++r) {
    const auto first = bits_.begin() + static_cast<std::ptrdiff_t>(r) * res_.width;
    const bool ones = std::all_of(first, first + res_.width, [](auto b) { return b == 1; });
    const bool zeros = std::all_of(first, first + res_.width, [](auto b) { return b == 0; });
    if (ones && hem == r - 1) {
      hem = r;
    } else if (!zeros) {
      return std::nullopt;
    }
  }
  if (hem < 0) return std::nullopt;
  return hem;
}

std::vector<float> WearingGuideMask::as_float() const { return {bits_.begin(), bits_.end()}; }

WearingGuideMask HemMask::expand() const {
  std::vector<std::uint8_t> bits(resolution.pixels(), 0);
  const int rows = std::clamp(hem_row + 1, 0, resolution.height);
  std::fill(bits.begin(), bits.begin() + static_cast<std::ptrdiff_t>(rows) * resolution.width, 1);
  return {resolution, std::move(bits)};
}

HemMask build_wearing_guide(const ParsingMap& parsing) {
  const Resolution res = parsing.resolution();
  const auto labels = parsing.labels();
  int hem = -1;
  for (int r = 0; r < res.height; ++r)
    for (int c = 0; c < res.width; ++c)
      if (labels[static_cast<std::size_t>(r) * res.width + c] == index_of(Role::TopTorso)) hem = r;
  if (hem < 0) fail(ErrorCode::MissingTorso, "parsing has no top-torso pixel; wearing-guide mask undefined");
  return {res, hem};
}

HemMask shift_hem(const HemMask& mask, int delta_rows) {
  HemMask out = mask;
  const long shifted = static_cast<long>(mask.hem_row) + delta_rows;
  out.hem_row = static_cast<int>(std::clamp<long>(shifted, 0, mask.resolution.height - 1));
  return out;
}

double wearing_guide_loss(const WearingGuideMask& mask, std::span<const double> bottom_prob, std::span<double> grad) {
  const std::size_t n = mask.bits().size();
  if (bottom_prob.size() != n || (!grad.empty() && grad.size() != n))
    fail(ErrorCode::ShapeMismatch, "mask and bottom probability differ in size");
  std::vector<double> m(mask.bits().begin(), mask.bits().end());
  return kernels::masked_abs_mean<double>(m, bottom_prob, grad);
}

std::optional<MaskError> validate_mask(const WearingGuideMask& mask, Resolution working) {
  if (mask.resolution() != working)
    return MaskError{ErrorCode::DimensionError, "mask is " + mask.resolution().to_string() +
                                                    " but the working resolution is " + working.to_string()};
  if (mask.bits().size() != static_cast<std::size_t>(working.pixels()))
    return MaskError{ErrorCode::DimensionError, "mask holds " + std::to_string(mask.bits().size()) +
                                                    " values for " + working.to_string()};
  for (std::size_t i = 0; i < mask.bits().size(); ++i)
    if (mask.bits()[i] > 1)
      return MaskError{ErrorCode::NonBinaryError, "mask value " + std::to_string(mask.bits()[i]) +
                                                      " at index " + std::to_string(i) + " is not 0 or 1"};
  return std::nullopt;
}

std::vector<int> rle_runs(const std::vector<std::uint8_t>& bits) {
  std::vector<int> runs;
  std::uint8_t current = 0;
  int length = 0;
  for (auto b : bits) {
    if (b != current) {
      runs.push_back(length);
      current = b;
      length = 0;
    }
    ++length;
  }
  runs.push_back(length);
  return runs;
}

std::vector<std::uint8_t> rle_expand(const std::vector<int>& runs, std::size_t total) {
  std::vector<std::uint8_t> bits;
  bits.reserve(total);
  std::uint8_t value = 0;
  for (int run : runs) {
    if (run < 0) fail(ErrorCode::InvalidArgument, "negative run length in RLE mask");
    if (bits.size() + run > total) fail(ErrorCode::DimensionError, "RLE runs exceed the mask size");
    bits.insert(bits.end(), static_cast<std::size_t>(run), value);
    value ^= 1;
  }
  if (bits.size() != total)
    fail(ErrorCode::DimensionError, "RLE runs cover " + std::to_string(bits.size()) + " of " +
                                        std::to_string(total) + " pixels");
  return bits;
}

nlohmann::json encode_hem(const HemMask& hem) { return {{"type", "hem"}, {"hem_row", hem.hem_row}}; }

nlohmann::json encode_rle(const WearingGuideMask& mask) {
  return {{"type", "rle"},
          {"height", mask.resolution().height},
          {"width", mask.resolution().width},
          {"runs", rle_runs(mask.bits())}};
}

WearingGuideMask decode_mask(const nlohmann::json& wire, Resolution working) {
  try {
    const std::string type = wire.at("type").get<std::string>();
    if (type == "hem") {
      const int hem = wire.at("hem_row").get<int>();
      if (hem < 0 || hem >= working.height)
        fail(ErrorCode::DimensionError, "hem_row " + std::to_string(hem) + " outside 0.." +
                                            std::to_string(working.height - 1));
      return HemMask{working, hem}.expand();
    }
    const Resolution res{wire.at("height").get<int>(), wire.at("width").get<int>()};
    if (res.height <= 0 || res.width <= 0) fail(ErrorCode::DimensionError, "mask dimensions must be positive");
    std::vector<std::uint8_t> bits;
    if (type == "rle") {
      bits = rle_expand(wire.at("runs").get<std::vector<int>>(), static_cast<std::size_t>(res.pixels()));
    } else if (type == "bitmap") {
      for (const auto& v : wire.at("bits")) {
        const int b = v.get<int>();
        if (b != 0 && b != 1) fail(ErrorCode::NonBinaryError, "bitmap mask holds value " + std::to_string(b));
        bits.push_back(static_cast<std::uint8_t>(b));
      }
      if (bits.size() != static_cast<std::size_t>(res.pixels()))
        fail(ErrorCode::DimensionError, "bitmap size does not match its height x width");
    } else {
      fail(ErrorCode::InvalidArgument, "unknown mask type '" + type + "' (hem, rle, bitmap)");
    }
    WearingGuideMask mask(res, std::move(bits));
    if (auto err = validate_mask(mask, working)) fail(err->code, err->message);
    return mask;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("malformed mask JSON: ") + e.what());
  }
}

}  // namespace wgv
