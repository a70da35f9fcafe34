#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "common/error.hpp"
#include "common/raster.hpp"
#include "data/types.hpp"

namespace wgv {

// Binary mask marking where bottom-garment pixels are forbidden.
class WearingGuideMask {
 public:
  WearingGuideMask() = default;
  WearingGuideMask(Resolution res, std::vector<std::uint8_t> bits) : res_(res), bits_(std::move(bits)) {}

  const Resolution& resolution() const noexcept { return res_; }
  const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }
  std::uint8_t at(int row, int col) const { return bits_[static_cast<std::size_t>(row) * res_.width + col]; }

  // The hem row when the mask is all-ones down to some row and zero below.
  std::optional<int> hem_row() const;
  std::vector<float> as_float() const;

  bool operator==(const WearingGuideMask&) const = default;

 private:
  Resolution res_{};
  std::vector<std::uint8_t> bits_;
};

// Canonical mask form: rows 0..hem_row are ones, the rest zeros.
struct HemMask {
  Resolution resolution{};
  int hem_row = 0;

  WearingGuideMask expand() const;
  bool operator==(const HemMask&) const = default;
};

// Hem at the lowest row holding a top-torso pixel; throws MissingTorso.
HemMask build_wearing_guide(const ParsingMap& parsing);

// hem_row' = clamp(hem_row + delta_rows, 0, H-1).
HemMask shift_hem(const HemMask& mask, int delta_rows);

// Mean over pixels of |mask * bottom_prob|. When `grad` is non-empty it
// receives d(loss)/d(bottom_prob).
double wearing_guide_loss(const WearingGuideMask& mask, std::span<const double> bottom_prob,
                          std::span<double> grad = {});

struct MaskError {
  ErrorCode code;
  std::string message;
};

// Empty when the mask is binary and at the working resolution.
std::optional<MaskError> validate_mask(const WearingGuideMask& mask, Resolution working);

// Wire format shared with the service and UI.
nlohmann::json encode_hem(const HemMask& hem);
nlohmann::json encode_rle(const WearingGuideMask& mask);
// Throws DimensionError / NonBinaryError / InvalidArgument.
WearingGuideMask decode_mask(const nlohmann::json& wire, Resolution working);

// Row-major run lengths starting with the count of leading zeros.
std::vector<int> rle_runs(const std::vector<std::uint8_t>& bits);
std::vector<std::uint8_t> rle_expand(const std::vector<int>& runs, std::size_t total);

}  // namespace wgv
