#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "app/config.hpp"

namespace wgv {

// Exclusive claim on an output directory through `<dir>/.lock`.
class OutputLock {
 public:
  // Throws Locked when another run holds the directory.
  explicit OutputLock(const std::filesystem::path& dir);
  ~OutputLock();
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  std::filesystem::path path_;
};

// CSV loss curve. On resume, rows past the resumed step are dropped.
class LossLog {
 public:
  LossLog(const std::filesystem::path& path, std::vector<std::string> columns, std::int64_t resume_step);
  void row(std::int64_t step, const std::vector<double>& values);

 private:
  std::ofstream out_;
  std::size_t width_;
};

// Maps a global step onto the sample indices of its batch. Each epoch uses
// its own shuffle seeded from (seed, epoch), so any step is reproducible
// without replaying earlier ones.
class BatchSchedule {
 public:
  BatchSchedule(std::size_t samples, int batch_size, std::uint64_t seed);

  std::int64_t steps_per_epoch() const noexcept { return steps_per_epoch_; }
  std::vector<std::size_t> batch(std::int64_t step) const;

 private:
  std::size_t samples_;
  int batch_size_;
  std::uint64_t seed_;
  std::int64_t steps_per_epoch_;
};

// Total optimizer steps for a run: cfg.steps when set, else epochs * steps/epoch.
std::int64_t total_steps(const TrainingConfig& cfg, const BatchSchedule& schedule);

// Seed for the data order; fresh entropy when the run is not deterministic.
std::uint64_t data_order_seed(const TrainingConfig& cfg);

// Throws DivergedLoss naming the step and batch when `value` is not finite.
void check_finite(double value, const char* what, std::int64_t step, const std::vector<std::string>& batch_ids);

struct TrainProgress {
  std::int64_t step = 0;
  std::int64_t total = 0;
  std::vector<std::pair<std::string, double>> losses;
};

struct TrainOptions {
  // Checkpoint to continue from (parameters, optimizer moments and step).
  std::optional<std::filesystem::path> resume;
  std::function<void(const TrainProgress&)> progress;
};

// cfg.out_dir, or the working directory when unset.
std::filesystem::path output_dir(const TrainingConfig& cfg);

// Path of the periodic checkpoint for `step`.
std::filesystem::path step_checkpoint_path(const std::filesystem::path& dir, const std::string& component,
                                           std::int64_t step);

}  // namespace wgv
