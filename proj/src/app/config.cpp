#include "app/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "common/error.hpp"

namespace wgv {
namespace {

std::string format(int v) { return std::to_string(v); }
std::string format(std::int64_t v) { return std::to_string(v); }
std::string format(std::uint64_t v) { return std::to_string(v); }
std::string format(bool v) { return v ? "true" : "false"; }
std::string format(const std::string& v) { return v; }
std::string format(const Resolution& r) { return r.to_string(); }
std::string format(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}
std::string format(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

[[noreturn]] void bad(const std::string& key, const std::string& value) {
  fail(ErrorCode::InvalidConfig, "invalid value '" + value + "' for " + key);
}

template <class T>
void parse_number(const std::string& key, const std::string& s, T& out) {
  T v{};
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) bad(key, s);
  out = v;
}

void parse_value(const std::string& k, const std::string& s, int& out) { parse_number(k, s, out); }
void parse_value(const std::string& k, const std::string& s, std::int64_t& out) { parse_number(k, s, out); }
void parse_value(const std::string& k, const std::string& s, std::uint64_t& out) { parse_number(k, s, out); }
void parse_value(const std::string& k, const std::string& s, double& out) { parse_number(k, s, out); }
void parse_value(const std::string&, const std::string& s, std::string& out) { out = s; }
void parse_value(const std::string& k, const std::string& s, bool& out) {
  if (s == "true" || s == "1") out = true;
  else if (s == "false" || s == "0") out = false;
  else bad(k, s);
}
void parse_value(const std::string& k, const std::string& s, Resolution& out) {
  try {
    out = Resolution::parse(s);
  } catch (const Error&) {
    bad(k, s);
  }
}
void parse_value(const std::string& k, const std::string& s, std::vector<int>& out) {
  std::vector<int> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    int x = 0;
    parse_number(k, item, x);
    v.push_back(x);
  }
  if (v.empty()) bad(k, s);
  out = std::move(v);
}

// Calls f(key, field) for every field, in serialization order.
template <class Config, class F>
void visit(Config& c, F&& f) {
  f("resolution", c.resolution);
  f("batch_size", c.batch_size);
  f("epochs", c.epochs);
  f("steps", c.steps);
  f("seed", c.seed);
  f("deterministic", c.deterministic);
  f("checkpoint_interval", c.checkpoint_interval);
  f("log_interval", c.log_interval);
  f("data_dir", c.data_dir);
  f("out_dir", c.out_dir);
  f("wgpgm.lr", c.wgpgm.lr);
  f("wgpgm.beta1", c.wgpgm.beta1);
  f("wgpgm.beta2", c.wgpgm.beta2);
  f("wgpgm.lambda_ce", c.wgpgm.lambda_ce);
  f("wgpgm.lambda_adv", c.wgpgm.lambda_adv);
  f("wgpgm.lambda_fm", c.wgpgm.lambda_fm);
  f("wgpgm.lambda_wg", c.wgpgm.lambda_wg);
  f("wgpgm.widths", c.wgpgm.widths);
  f("wgpgm.d_width", c.wgpgm.d_width);
  f("scwm.lr", c.scwm.lr);
  f("scwm.beta1", c.scwm.beta1);
  f("scwm.beta2", c.scwm.beta2);
  f("scwm.lambda_color", c.scwm.lambda_color);
  f("scwm.lambda_seg", c.scwm.lambda_seg);
  f("scwm.lambda_reg", c.scwm.lambda_reg);
  f("scwm.grid_rows", c.scwm.grid_rows);
  f("scwm.grid_cols", c.scwm.grid_cols);
  f("scwm.widths", c.scwm.widths);
  f("scwm.predicted_parsing", c.scwm.predicted_parsing);
  f("scwm.wgpgm_checkpoint", c.scwm.wgpgm_checkpoint);
  f("tom.lr", c.tom.lr);
  f("tom.beta1", c.tom.beta1);
  f("tom.beta2", c.tom.beta2);
  f("tom.lambda_l1", c.tom.lambda_l1);
  f("tom.lambda_adv", c.tom.lambda_adv);
  f("tom.lambda_fm", c.tom.lambda_fm);
  f("tom.widths", c.tom.widths);
  f("tom.d_width", c.tom.d_width);
  f("tom.predicted_inputs", c.tom.predicted_inputs);
  f("tom.wgpgm_checkpoint", c.tom.wgpgm_checkpoint);
  f("tom.scwm_checkpoint", c.tom.scwm_checkpoint);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void TrainingConfig::set(const std::string& key, const std::string& value) {
  bool found = false;
  visit(*this, [&](const char* k, auto& field) {
    if (key == k) {
      parse_value(key, value, field);
      found = true;
    }
  });
  if (!found) fail(ErrorCode::InvalidConfig, "unknown config key '" + key + "'");
}

std::string TrainingConfig::get(const std::string& key) const {
  std::string out;
  bool found = false;
  visit(*this, [&](const char* k, const auto& field) {
    if (key == k) {
      out = format(field);
      found = true;
    }
  });
  if (!found) fail(ErrorCode::InvalidConfig, "unknown config key '" + key + "'");
  return out;
}

std::vector<std::string> TrainingConfig::keys() const {
  std::vector<std::string> out;
  visit(*this, [&](const char* k, const auto&) { out.emplace_back(k); });
  return out;
}

std::string TrainingConfig::serialize() const {
  std::string out;
  visit(*this, [&](const char* k, const auto& field) { out += std::string(k) + "=" + format(field) + "\n"; });
  return out;
}

std::string TrainingConfig::serialize_for_checkpoint() const {
  TrainingConfig c = *this;
  c.data_dir.clear();
  c.out_dir.clear();
  return c.serialize();
}

TrainingConfig TrainingConfig::parse(const std::string& text) {
  TrainingConfig c;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      fail(ErrorCode::InvalidConfig, "line " + std::to_string(lineno) + ": expected key=value");
    c.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return c;
}

TrainingConfig TrainingConfig::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) fail(ErrorCode::IoError, "cannot read config " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void TrainingConfig::save(const std::filesystem::path& file) const {
  std::ofstream out(file);
  if (!out) fail(ErrorCode::IoError, "cannot write config " + file.string());
  out << serialize();
}

void TrainingConfig::validate() const {
  auto check = [](bool ok, const std::string& what) {
    if (!ok) fail(ErrorCode::InvalidConfig, what);
  };
  try {
    resolution.validate();
  } catch (const Error& e) {
    fail(ErrorCode::InvalidConfig, e.what());
  }
  check(batch_size > 0, "batch_size must be positive");
  check(epochs >= 0, "epochs must be non-negative");
  check(steps >= 0, "steps must be non-negative");
  check(checkpoint_interval >= 0, "checkpoint_interval must be non-negative");
  check(log_interval > 0, "log_interval must be positive");
  auto widths_ok = [&](const std::vector<int>& w, const char* key) {
    check(!w.empty(), std::string(key) + " must list at least one width");
    for (int x : w) check(x > 0, std::string(key) + " entries must be positive");
  };
  auto adam_ok = [&](double lr, double b1, double b2, const std::string& m) {
    check(lr > 0, m + ".lr must be positive");
    check(b1 >= 0 && b1 < 1 && b2 >= 0 && b2 < 1, m + " betas must lie in [0,1)");
  };
  adam_ok(wgpgm.lr, wgpgm.beta1, wgpgm.beta2, "wgpgm");
  adam_ok(scwm.lr, scwm.beta1, scwm.beta2, "scwm");
  adam_ok(tom.lr, tom.beta1, tom.beta2, "tom");
  for (double w : {wgpgm.lambda_ce, wgpgm.lambda_adv, wgpgm.lambda_fm, wgpgm.lambda_wg, scwm.lambda_color,
                   scwm.lambda_seg, scwm.lambda_reg, tom.lambda_l1, tom.lambda_adv, tom.lambda_fm})
    check(w >= 0, "loss weights must be non-negative");
  widths_ok(wgpgm.widths, "wgpgm.widths");
  widths_ok(scwm.widths, "scwm.widths");
  widths_ok(tom.widths, "tom.widths");
  check(wgpgm.d_width > 0 && tom.d_width > 0, "discriminator widths must be positive");
  check(scwm.grid_rows >= 2 && scwm.grid_cols >= 2, "control grid needs at least 2x2 points");
  check(!scwm.predicted_parsing || !scwm.wgpgm_checkpoint.empty(),
        "scwm.predicted_parsing needs scwm.wgpgm_checkpoint");
  check(!tom.predicted_inputs || (!tom.wgpgm_checkpoint.empty() && !tom.scwm_checkpoint.empty()),
        "tom.predicted_inputs needs tom.wgpgm_checkpoint and tom.scwm_checkpoint");
}

}  // namespace wgv
