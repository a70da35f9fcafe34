#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "nn/tape.hpp"

namespace wgv::nn {

// Versioned binary container: component name, label-schema hash, config
// snapshot, step counter and named tensors.
class Checkpoint {
 public:
  static constexpr std::uint32_t kVersion = 1;

  std::string component;
  std::uint64_t schema_hash = 0;
  std::string config;
  std::int64_t step = 0;

  void put(const std::string& name, const Tensor& t) { tensors_[name] = t; }
  bool has(const std::string& name) const { return tensors_.count(name) != 0; }
  // Throws CorruptFile when absent or shaped differently.
  Tensor get(const std::string& name, const Shape& expected) const;
  const std::map<std::string, Tensor>& tensors() const noexcept { return tensors_; }

  void put_params(const std::string& prefix, const ParameterStore& store);
  void get_params(const std::string& prefix, ParameterStore& store) const;

  // Writes <path>.partial, then renames it over `path`.
  void save(const std::filesystem::path& path) const;
  // Throws CorruptFile on bad bytes and SchemaMismatch when the schema hash
  // differs from `expected_schema_hash`.
  static Checkpoint load(const std::filesystem::path& path, std::uint64_t expected_schema_hash);
  // Expected component name check on top of load().
  static Checkpoint load(const std::filesystem::path& path, std::uint64_t expected_schema_hash,
                         const std::string& component);

 private:
  std::map<std::string, Tensor> tensors_;
};

}  // namespace wgv::nn
