#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "common/raster.hpp"

namespace wgv {

struct WgpgmSettings {
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double lambda_ce = 10.0;
  double lambda_adv = 1.0;
  double lambda_fm = 10.0;
  double lambda_wg = 10.0;
  std::vector<int> widths{32, 64, 128, 256, 256};
  int d_width = 32;
  bool operator==(const WgpgmSettings&) const = default;
};

struct ScwmSettings {
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double lambda_color = 1.0;
  double lambda_seg = 1.0;
  double lambda_reg = 0.01;
  int grid_rows = 5;
  int grid_cols = 5;
  std::vector<int> widths{32, 64, 128, 128};
  // Train on WGPGM predictions instead of ground-truth parsing slices.
  bool predicted_parsing = false;
  std::string wgpgm_checkpoint;
  bool operator==(const ScwmSettings&) const = default;
};

struct TomSettings {
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double lambda_l1 = 10.0;
  double lambda_adv = 1.0;
  double lambda_fm = 10.0;
  std::vector<int> widths{32, 64, 128, 256, 256};
  int d_width = 32;
  // Train on upstream predictions instead of ground truth (needs both checkpoints).
  bool predicted_inputs = false;
  std::string wgpgm_checkpoint;
  std::string scwm_checkpoint;
  bool operator==(const TomSettings&) const = default;
};

// Flat key=value file; module keys carry a "wgpgm." / "scwm." / "tom." prefix.
struct TrainingConfig {
  Resolution resolution = kDeskResolution;
  int batch_size = 8;
  int epochs = 1;
  // When positive, overrides epochs with an exact step budget.
  std::int64_t steps = 0;
  std::uint64_t seed = 1;
  bool deterministic = true;
  // 0 writes only the final checkpoint.
  std::int64_t checkpoint_interval = 0;
  std::int64_t log_interval = 10;
  std::string data_dir;
  std::string out_dir;
  WgpgmSettings wgpgm;
  ScwmSettings scwm;
  TomSettings tom;

  // Throws InvalidConfig on an unknown key or an unparsable value.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  std::vector<std::string> keys() const;

  std::string serialize() const;
  // serialize() without data_dir and out_dir, so checkpoints of identical
  // runs in different directories are byte-identical.
  std::string serialize_for_checkpoint() const;
  // Blank lines and lines starting with '#' are ignored.
  static TrainingConfig parse(const std::string& text);
  static TrainingConfig load(const std::filesystem::path& file);
  void save(const std::filesystem::path& file) const;

  // Throws InvalidConfig for non-positive sizes, negative weights, etc.
  void validate() const;

  bool operator==(const TrainingConfig&) const = default;
};

}  // namespace wgv
