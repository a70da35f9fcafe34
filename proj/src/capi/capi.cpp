#include "wgviton/wgviton.h"

#include <cstring>
#include <fstream>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "app/config.hpp"
#include "app/evaluate.hpp"
#include "app/pipeline.hpp"
#include "app/service.hpp"
#include "common/error.hpp"
#include "data/loader.hpp"
#include "data/synthetic.hpp"
#include "scwm/scwm.hpp"
#include "tom/tom.hpp"
#include "wgpgm/wgpgm.hpp"

struct wgv_config {
  wgv::TrainingConfig cfg;
};

struct wgv_pipeline {
  wgv::PipelineModels models;
};

struct wgv_server {
  std::unique_ptr<wgv::TryOnService> service;
};

namespace {

thread_local std::string g_last_error;

template <class F>
wgv_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return WGV_OK;
  } catch (const wgv::Error& e) {
    g_last_error = e.what();
    return static_cast<wgv_status>(static_cast<int>(e.code()));
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return WGV_ERR_INTERNAL;
  }
}

void require_arg(const void* p, const char* name) {
  if (!p) wgv::fail(wgv::ErrorCode::InvalidArgument, std::string(name) + " must not be null");
}

void copy_out(const std::string& value, char* buf, size_t cap) {
  if (!buf || cap == 0) return;
  const size_t n = std::min(value.size(), cap - 1);
  std::memcpy(buf, value.data(), n);
  buf[n] = '\0';
}

}  // namespace

extern "C" {

const char* wgv_version(void) { return "1.0.0"; }

const char* wgv_status_name(wgv_status status) {
  if (status == WGV_OK) return "Ok";
  if (status == WGV_ERR_INTERNAL) return "Internal";
  static thread_local std::string name;
  name = std::string(wgv::to_string(static_cast<wgv::ErrorCode>(status)));
  return name.c_str();
}

const char* wgv_last_error(void) { return g_last_error.c_str(); }

wgv_status wgv_config_new(wgv_config** out) {
  return guarded([&] {
    require_arg(out, "out");
    *out = new wgv_config{};
  });
}

wgv_status wgv_config_load(const char* path, wgv_config** out) {
  return guarded([&] {
    require_arg(path, "path");
    require_arg(out, "out");
    *out = new wgv_config{wgv::TrainingConfig::load(path)};
  });
}

wgv_status wgv_config_set(wgv_config* config, const char* key, const char* value) {
  return guarded([&] {
    require_arg(config, "config");
    require_arg(key, "key");
    require_arg(value, "value");
    config->cfg.set(key, value);
  });
}

wgv_status wgv_config_get(const wgv_config* config, const char* key, char* buf, size_t cap, size_t* needed) {
  return guarded([&] {
    require_arg(config, "config");
    require_arg(key, "key");
    const std::string v = config->cfg.get(key);
    if (needed) *needed = v.size() + 1;
    copy_out(v, buf, cap);
  });
}

wgv_status wgv_config_save(const wgv_config* config, const char* path) {
  return guarded([&] {
    require_arg(config, "config");
    require_arg(path, "path");
    config->cfg.save(path);
  });
}

void wgv_config_free(wgv_config* config) { delete config; }

wgv_status wgv_generate_dataset(int count, const char* resolution, uint64_t seed, const char* split,
                                const char* out_dir) {
  return guarded([&] {
    require_arg(resolution, "resolution");
    require_arg(out_dir, "out_dir");
    const wgv::Split s = split ? wgv::parse_split(split) : wgv::Split::Train;
    wgv::synth::gen_synthetic_dataset(count, wgv::Resolution::parse(resolution), seed, out_dir, s);
  });
}

wgv_status wgv_make_unpaired(const char* pair_dir, uint64_t seed, char* out_path, size_t cap) {
  return guarded([&] {
    require_arg(pair_dir, "pair_dir");
    const wgv::DatasetManifest pair = wgv::DatasetManifest::load(pair_dir);
    const std::filesystem::path file = pair.root / "manifest_unpair.json";
    wgv::make_unpaired_split(pair, seed).save(file);
    copy_out(file.string(), out_path, cap);
  });
}

wgv_status wgv_train(const char* component, const char* data_dir, const wgv_config* config, const char* resume,
                     wgv_progress_fn progress, void* user, char* out_path, size_t cap) {
  return guarded([&] {
    require_arg(component, "component");
    require_arg(data_dir, "data_dir");
    require_arg(config, "config");
    const wgv::DatasetManifest manifest = wgv::DatasetManifest::load(data_dir);
    wgv::TrainOptions options;
    if (resume) options.resume = resume;
    if (progress)
      options.progress = [progress, user](const wgv::TrainProgress& p) {
        nlohmann::json losses = nlohmann::json::object();
        for (const auto& [k, v] : p.losses) losses[k] = v;
        progress(p.step, p.total, losses.dump().c_str(), user);
      };
    const std::string which = component;
    std::filesystem::path path;
    if (which == "wgpgm") path = wgv::wgpgm::train(manifest, config->cfg, options);
    else if (which == "scwm") path = wgv::scwm::train(manifest, config->cfg, options);
    else if (which == "tom") path = wgv::tom::train(manifest, config->cfg, options);
    else wgv::fail(wgv::ErrorCode::InvalidArgument, "unknown component '" + which + "' (wgpgm, scwm, tom)");
    copy_out(path.string(), out_path, cap);
  });
}

wgv_status wgv_default_mask(const char* data_dir, const char* sample_id, int shift_rows, char* buf, size_t cap,
                            size_t* needed) {
  return guarded([&] {
    require_arg(data_dir, "data_dir");
    require_arg(sample_id, "sample_id");
    const wgv::DatasetManifest manifest = wgv::DatasetManifest::load(data_dir);
    if (!manifest.find(sample_id)) wgv::fail(wgv::ErrorCode::UnknownId, std::string("unknown sample '") + sample_id + "'");
    const wgv::HemMask hem = wgv::shift_hem(wgv::build_wearing_guide(wgv::load_parsing(manifest, sample_id)), shift_rows);
    const std::string wire = wgv::encode_hem(hem).dump();
    if (needed) *needed = wire.size() + 1;
    copy_out(wire, buf, cap);
  });
}

wgv_status wgv_pipeline_load(const char* wgpgm_ckpt, const char* scwm_ckpt, const char* tom_ckpt,
                             wgv_pipeline** out) {
  return guarded([&] {
    require_arg(wgpgm_ckpt, "wgpgm_ckpt");
    require_arg(scwm_ckpt, "scwm_ckpt");
    require_arg(tom_ckpt, "tom_ckpt");
    require_arg(out, "out");
    *out = new wgv_pipeline{wgv::PipelineModels::load({wgpgm_ckpt, scwm_ckpt, tom_ckpt})};
  });
}

void wgv_pipeline_free(wgv_pipeline* pipeline) { delete pipeline; }

wgv_status wgv_pipeline_infer(const wgv_pipeline* pipeline, const char* data_dir, const char* sample_id,
                              const char* mask_json, const char* out_dir) {
  return guarded([&] {
    require_arg(pipeline, "pipeline");
    require_arg(data_dir, "data_dir");
    require_arg(sample_id, "sample_id");
    require_arg(out_dir, "out_dir");
    const wgv::DatasetManifest manifest = wgv::DatasetManifest::load(data_dir);
    const wgv::SampleRecord s = wgv::load_sample(manifest, sample_id);
    wgv::WearingGuideMask mask;
    if (mask_json) {
      const nlohmann::json wire = nlohmann::json::parse(mask_json, nullptr, false);
      if (wire.is_discarded()) wgv::fail(wgv::ErrorCode::InvalidArgument, "mask is not valid JSON");
      mask = wgv::decode_mask(wire, manifest.resolution);
    } else {
      mask = wgv::build_wearing_guide(s.parsing).expand();
    }
    const wgv::TryOnResult r =
        wgv::full_pipeline_infer(wgv::TryOnInputs::from_sample(s, std::move(mask)), pipeline->models);
    wgv::write_bundle(r, out_dir, sample_id);
  });
}

wgv_status wgv_evaluate(const wgv_pipeline* pipeline, const char* pair_dir, const char* unpair_dir,
                        uint64_t embedder_seed, int threads, int identity, const char* report_path,
                        const char* csv_path) {
  return guarded([&] {
    require_arg(pair_dir, "pair_dir");
    require_arg(unpair_dir, "unpair_dir");
    require_arg(report_path, "report_path");
    if (!identity) require_arg(pipeline, "pipeline");
    const wgv::DatasetManifest pair = wgv::DatasetManifest::load(pair_dir);
    const wgv::DatasetManifest unpair = wgv::DatasetManifest::load(unpair_dir);
    const wgv::metrics::RandomConvEmbedder embedder(embedder_seed);
    const wgv::metrics::MetricsReport report = wgv::evaluate_split(
        pipeline ? &pipeline->models : nullptr, pair, unpair, embedder, {threads, identity != 0});
    report.write(report_path);
    std::ofstream(std::filesystem::path(report_path).replace_extension(".diagnostics.json"))
        << report.diagnostics().dump(2) << "\n";
    if (csv_path) report.write_csv(csv_path);
  });
}

wgv_status wgv_server_new(const wgv_pipeline* pipeline, const char* catalog_dir, wgv_server** out) {
  return guarded([&] {
    require_arg(pipeline, "pipeline");
    require_arg(catalog_dir, "catalog_dir");
    require_arg(out, "out");
    auto service = std::make_unique<wgv::TryOnService>(pipeline->models, wgv::DatasetManifest::load(catalog_dir));
    *out = new wgv_server{std::move(service)};
  });
}

wgv_status wgv_server_bind(wgv_server* server, const char* host, int port, int* bound_port) {
  return guarded([&] {
    require_arg(server, "server");
    const int p = server->service->bind(host ? host : "127.0.0.1", port);
    if (bound_port) *bound_port = p;
  });
}

wgv_status wgv_server_run(wgv_server* server) {
  return guarded([&] {
    require_arg(server, "server");
    server->service->run();
  });
}

void wgv_server_stop(wgv_server* server) {
  if (server) server->service->stop();
}

void wgv_server_free(wgv_server* server) { delete server; }

}  // extern "C"
