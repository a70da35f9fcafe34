#include "app/training.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>

#include "common/error.hpp"
#include "common/rng.hpp"

namespace wgv {

OutputLock::OutputLock(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
  path_ = dir / ".lock";
  const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    if (errno == EEXIST) fail(ErrorCode::Locked, dir.string() + " is in use by another run (" + path_.string() + ")");
    fail(ErrorCode::IoError, "cannot create " + path_.string());
  }
  const std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

OutputLock::~OutputLock() {
  std::error_code ec;
  std::filesystem::remove(path_, ec);
}

LossLog::LossLog(const std::filesystem::path& path, std::vector<std::string> columns, std::int64_t resume_step)
    : width_(columns.size()) {
  std::vector<std::string> kept;
  if (resume_step > 0) {
    std::ifstream in(path);
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
      if (header) {
        header = false;
        continue;
      }
      if (line.empty()) continue;
      if (std::stoll(line.substr(0, line.find(','))) <= resume_step) kept.push_back(line);
    }
  }
  out_.open(path, std::ios::trunc);
  if (!out_) fail(ErrorCode::IoError, "cannot write loss log " + path.string());
  out_ << "step";
  for (const auto& c : columns) out_ << ',' << c;
  out_ << '\n';
  for (const auto& l : kept) out_ << l << '\n';
  out_.flush();
}

void LossLog::row(std::int64_t step, const std::vector<double>& values) {
  if (values.size() != width_) fail(ErrorCode::InvalidArgument, "loss log row has the wrong width");
  out_ << step;
  char buf[32];
  for (double v : values) {
    std::snprintf(buf, sizeof buf, "%.8g", v);
    out_ << ',' << buf;
  }
  out_ << '\n';
  out_.flush();
}

BatchSchedule::BatchSchedule(std::size_t samples, int batch_size, std::uint64_t seed)
    : samples_(samples), batch_size_(batch_size), seed_(seed) {
  if (samples == 0) fail(ErrorCode::EmptyDataset, "training set is empty");
  if (batch_size <= 0) fail(ErrorCode::InvalidConfig, "batch_size must be positive");
  steps_per_epoch_ = static_cast<std::int64_t>((samples + batch_size - 1) / batch_size);
}

std::vector<std::size_t> BatchSchedule::batch(std::int64_t step) const {
  const std::int64_t epoch = step / steps_per_epoch_;
  const std::int64_t within = step % steps_per_epoch_;
  std::vector<std::size_t> order(samples_);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(mix_seed(seed_, static_cast<std::uint64_t>(epoch)));
  for (std::size_t i = samples_ - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_int(0, static_cast<int>(i))]);
  const std::size_t begin = static_cast<std::size_t>(within) * batch_size_;
  const std::size_t end = std::min(samples_, begin + batch_size_);
  return {order.begin() + begin, order.begin() + end};
}

std::int64_t total_steps(const TrainingConfig& cfg, const BatchSchedule& schedule) {
  if (cfg.steps > 0) return cfg.steps;
  return static_cast<std::int64_t>(cfg.epochs) * schedule.steps_per_epoch();
}

std::uint64_t data_order_seed(const TrainingConfig& cfg) {
  if (cfg.deterministic) return cfg.seed;
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

void check_finite(double value, const char* what, std::int64_t step, const std::vector<std::string>& batch_ids) {
  if (std::isfinite(value)) return;
  std::ostringstream msg;
  msg << what << " loss became non-finite at step " << step << " (batch:";
  for (const auto& id : batch_ids) msg << ' ' << id;
  msg << ')';
  fail(ErrorCode::DivergedLoss, msg.str());
}

std::filesystem::path output_dir(const TrainingConfig& cfg) {
  return cfg.out_dir.empty() ? std::filesystem::path(".") : std::filesystem::path(cfg.out_dir);
}

std::filesystem::path step_checkpoint_path(const std::filesystem::path& dir, const std::string& component,
                                           std::int64_t step) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s-step%06lld.ckpt", component.c_str(), static_cast<long long>(step));
  return dir / buf;
}

}  // namespace wgv
