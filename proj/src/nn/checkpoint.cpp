#include "nn/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "common/error.hpp"

namespace wgv::nn {
namespace {

constexpr char kMagic[8] = {'W', 'G', 'V', 'C', 'K', 'P', 'T', '1'};

class Writer {
 public:
  explicit Writer(std::ofstream& out) : out_(out) {}
  template <class T>
  void pod(T v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void str(const std::string& s) {
    pod<std::uint64_t>(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }

 private:
  std::ofstream& out_;
};

class Reader {
 public:
  Reader(const std::string& bytes, std::string origin) : bytes_(bytes), origin_(std::move(origin)) {}
  template <class T>
  T pod() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string str() {
    const auto n = pod<std::uint64_t>();
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void floats(float* dst, std::size_t n) {
    need(n * sizeof(float));
    std::memcpy(dst, bytes_.data() + pos_, n * sizeof(float));
    pos_ += n * sizeof(float);
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (n > bytes_.size() - pos_) fail(ErrorCode::CorruptFile, origin_ + ": truncated checkpoint");
  }
  const std::string& bytes_;
  std::string origin_;
  std::size_t pos_ = 0;
};

}  // namespace

Tensor Checkpoint::get(const std::string& name, const Shape& expected) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) fail(ErrorCode::CorruptFile, "checkpoint lacks tensor '" + name + "'");
  if (it->second.shape() != expected)
    fail(ErrorCode::CorruptFile, "checkpoint tensor '" + name + "' has shape " + it->second.shape().to_string() +
                                     ", expected " + expected.to_string());
  return it->second;
}

void Checkpoint::put_params(const std::string& prefix, const ParameterStore& store) {
  for (const Parameter* p : store.all()) put(prefix + "." + p->name, p->value);
}

void Checkpoint::get_params(const std::string& prefix, ParameterStore& store) const {
  for (Parameter* p : store.all()) p->value = get(prefix + "." + p->name, p->value.shape());
}

void Checkpoint::save(const std::filesystem::path& path) const {
  std::filesystem::path partial = path;
  partial += ".partial";
  {
    std::ofstream out(partial, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IoError, "cannot write " + partial.string());
    Writer w(out);
    out.write(kMagic, sizeof(kMagic));
    w.pod<std::uint32_t>(kVersion);
    w.str(component);
    w.pod<std::uint64_t>(schema_hash);
    w.str(config);
    w.pod<std::int64_t>(step);
    w.pod<std::uint64_t>(tensors_.size());
    for (const auto& [name, t] : tensors_) {
      w.str(name);
      const Shape& s = t.shape();
      w.pod<std::int32_t>(s.n);
      w.pod<std::int32_t>(s.c);
      w.pod<std::int32_t>(s.h);
      w.pod<std::int32_t>(s.w);
      out.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(float)));
    }
    out.flush();
    if (!out) fail(ErrorCode::IoError, "failed writing " + partial.string());
  }
  std::error_code ec;
  std::filesystem::rename(partial, path, ec);
  if (ec) fail(ErrorCode::IoError, "cannot rename " + partial.string() + ": " + ec.message());
}

Checkpoint Checkpoint::load(const std::filesystem::path& path, std::uint64_t expected_schema_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open checkpoint " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
    fail(ErrorCode::CorruptFile, path.string() + " is not a checkpoint");
  const std::string body = bytes.substr(sizeof(kMagic));
  Reader rd(body, path.string());
  const auto version = rd.pod<std::uint32_t>();
  if (version != kVersion)
    fail(ErrorCode::CorruptFile, path.string() + ": unsupported checkpoint version " + std::to_string(version));
  Checkpoint c;
  c.component = rd.str();
  c.schema_hash = rd.pod<std::uint64_t>();
  if (c.schema_hash != expected_schema_hash)
    fail(ErrorCode::SchemaMismatch, path.string() + " was trained with a different label schema");
  c.config = rd.str();
  c.step = rd.pod<std::int64_t>();
  const auto count = rd.pod<std::uint64_t>();
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name = rd.str();
    Shape s;
    s.n = rd.pod<std::int32_t>();
    s.c = rd.pod<std::int32_t>();
    s.h = rd.pod<std::int32_t>();
    s.w = rd.pod<std::int32_t>();
    if (s.n < 0 || s.c < 0 || s.h < 0 || s.w < 0) fail(ErrorCode::CorruptFile, path.string() + ": bad tensor shape");
    Tensor t(s);
    rd.floats(t.data(), t.size());
    c.tensors_.emplace(std::move(name), std::move(t));
  }
  if (!rd.done()) fail(ErrorCode::CorruptFile, path.string() + ": trailing bytes");
  return c;
}

Checkpoint Checkpoint::load(const std::filesystem::path& path, std::uint64_t expected_schema_hash,
                            const std::string& component) {
  Checkpoint c = load(path, expected_schema_hash);
  if (c.component != component)
    fail(ErrorCode::SchemaMismatch,
         path.string() + " holds a '" + c.component + "' checkpoint, expected '" + component + "'");
  return c;
}

}  // namespace wgv::nn
