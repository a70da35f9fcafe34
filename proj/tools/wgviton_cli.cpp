// Command-line front end; talks to the library only through the C API.
#include <csignal>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wgviton/wgviton.h"

namespace {

constexpr int kUsageError = 1;
constexpr int kRuntimeError = 2;

struct Failure {
  wgv_status status;
};

void check(wgv_status s) {
  if (s != WGV_OK) throw Failure{s};
}

struct ConfigHandle {
  wgv_config* ptr = nullptr;
  ~ConfigHandle() { wgv_config_free(ptr); }
};

struct PipelineHandle {
  wgv_pipeline* ptr = nullptr;
  ~PipelineHandle() { wgv_pipeline_free(ptr); }
};

struct Checkpoints {
  std::string dir;
  std::string wgpgm, scwm, tom;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--ckpt-dir", dir, "Directory holding wgpgm.ckpt, scwm.ckpt and tom.ckpt");
    cmd->add_option("--wgpgm", wgpgm, "WGPGM checkpoint");
    cmd->add_option("--scwm", scwm, "SCWM checkpoint");
    cmd->add_option("--tom", tom, "TOM checkpoint");
  }
  void load(PipelineHandle& h) {
    auto pick = [&](const std::string& explicit_path, const char* name) {
      if (!explicit_path.empty()) return explicit_path;
      if (dir.empty()) throw CLI::ValidationError("--" + std::string(name), "needs a path or --ckpt-dir");
      return dir + "/" + name + ".ckpt";
    };
    const std::string g = pick(wgpgm, "wgpgm"), w = pick(scwm, "scwm"), t = pick(tom, "tom");
    check(wgv_pipeline_load(g.c_str(), w.c_str(), t.c_str(), &h.ptr));
  }
};

wgv_server* g_server = nullptr;

void on_signal(int) {
  if (g_server) wgv_server_stop(g_server);
}

void print_progress(int64_t step, int64_t total, const char* losses, void*) {
  std::printf("step %lld/%lld %s\n", static_cast<long long>(step), static_cast<long long>(total), losses);
  std::fflush(stdout);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CLI::ValidationError("--mask", "cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Virtual try-on with wearing-style control"};
  app.require_subcommand(1);
  app.set_version_flag("--version", wgv_version());

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset");
  int count = 100;
  std::uint64_t gen_seed = 1;
  std::string gen_res = "64x48", gen_out, gen_split = "train";
  bool with_unpaired = false;
  std::uint64_t unpaired_seed = 1;
  gen->add_option("--count", count, "Number of samples")->required()->check(CLI::PositiveNumber);
  gen->add_option("--seed", gen_seed, "Generator seed");
  gen->add_option("--resolution", gen_res, "HxW, 4:3 portrait");
  gen->add_option("--split", gen_split, "Split tag")->check(CLI::IsMember({"train", "test_pair", "test_unpair"}));
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_flag("--with-unpaired", with_unpaired, "Also write manifest_unpair.json (test_pair only)");
  gen->add_option("--unpaired-seed", unpaired_seed, "Seed of the garment shuffle for the unpaired manifest");

  // train
  auto* train = app.add_subcommand("train", "Train one module");
  std::string component, data_dir, config_file, out_dir, resume, resolution;
  std::vector<std::string> overrides;
  int epochs = -1, batch = -1;
  long long steps = -1, seed = -1;
  train->add_option("module", component, "wgpgm, scwm or tom")
      ->required()
      ->check(CLI::IsMember({"wgpgm", "scwm", "tom"}));
  train->add_option("--data", data_dir, "Training dataset directory")->required();
  train->add_option("--config", config_file, "key=value config file");
  train->add_option("--set", overrides, "Config override key=value (repeatable)");
  train->add_option("--out", out_dir, "Output directory");
  train->add_option("--epochs", epochs, "Epochs")->check(CLI::NonNegativeNumber);
  train->add_option("--steps", steps, "Exact step budget (overrides epochs)")->check(CLI::NonNegativeNumber);
  train->add_option("--batch-size", batch, "Batch size")->check(CLI::PositiveNumber);
  train->add_option("--seed", seed, "Seed")->check(CLI::NonNegativeNumber);
  train->add_option("--resolution", resolution, "HxW");
  train->add_option("--resume", resume, "Checkpoint to resume from");

  // infer
  auto* infer = app.add_subcommand("infer", "Run the full pipeline on one sample");
  Checkpoints infer_ckpt;
  infer_ckpt.add_to(infer);
  std::string infer_data, sample, mask_file, infer_out;
  int hem_shift = 0;
  infer->add_option("--data", infer_data, "Dataset directory")->required();
  infer->add_option("--sample", sample, "Sample id")->required();
  infer->add_option("--mask", mask_file, "Wire-format mask JSON file");
  infer->add_option("--hem-shift", hem_shift, "Shift the sample's own hem by this many rows");
  infer->add_option("--out", infer_out, "Output directory")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate on paired and unpaired test splits");
  Checkpoints eval_ckpt;
  eval_ckpt.add_to(eval);
  std::string pair_dir, unpair_path, report, csv;
  std::uint64_t embedder_seed = 7;
  int threads = 1;
  bool identity = false;
  eval->add_option("--pair", pair_dir, "Paired test dataset")->required();
  eval->add_option("--unpair", unpair_path, "Unpaired manifest (default <pair>/manifest_unpair.json)");
  eval->add_option("--out", report, "Report JSON path")->required();
  eval->add_option("--csv", csv, "Per-sample CSV path");
  eval->add_option("--embedder-seed", embedder_seed, "Seed of the random feature embedder");
  eval->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  eval->add_flag("--identity", identity, "Score ground truth against itself");

  // serve
  auto* serve = app.add_subcommand("serve", "Serve the try-on HTTP API");
  Checkpoints serve_ckpt;
  serve_ckpt.add_to(serve);
  std::string catalog, host = "127.0.0.1";
  int port = 8080;
  serve->add_option("--data", catalog, "Catalog dataset directory")->required();
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port (0 picks a free one)")->check(CLI::Range(0, 65535));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "ERROR Usage: %s\n", e.what());
    return kUsageError;
  }

  try {
    if (*gen) {
      check(wgv_generate_dataset(count, gen_res.c_str(), gen_seed, gen_split.c_str(), gen_out.c_str()));
      if (with_unpaired) {
        if (gen_split != "test_pair") throw CLI::ValidationError("--with-unpaired", "needs --split test_pair");
        char path[4096];
        check(wgv_make_unpaired(gen_out.c_str(), unpaired_seed, path, sizeof path));
        std::printf("%s\n", path);
      }
      std::printf("generated %d samples in %s\n", count, gen_out.c_str());
    } else if (*train) {
      ConfigHandle cfg;
      check(config_file.empty() ? wgv_config_new(&cfg.ptr) : wgv_config_load(config_file.c_str(), &cfg.ptr));
      for (const auto& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw CLI::ValidationError("--set", "expects key=value, got '" + kv + "'");
        check(wgv_config_set(cfg.ptr, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()));
      }
      auto set = [&](const char* key, const std::string& v) { check(wgv_config_set(cfg.ptr, key, v.c_str())); };
      set("data_dir", data_dir);
      if (!out_dir.empty()) set("out_dir", out_dir);
      if (epochs >= 0) set("epochs", std::to_string(epochs));
      if (steps >= 0) set("steps", std::to_string(steps));
      if (batch > 0) set("batch_size", std::to_string(batch));
      if (seed >= 0) set("seed", std::to_string(seed));
      if (!resolution.empty()) set("resolution", resolution);
      char path[4096];
      check(wgv_train(component.c_str(), data_dir.c_str(), cfg.ptr, resume.empty() ? nullptr : resume.c_str(),
                      print_progress, nullptr, path, sizeof path));
      std::printf("%s\n", path);
    } else if (*infer) {
      PipelineHandle p;
      infer_ckpt.load(p);
      std::string mask;
      if (!mask_file.empty()) mask = read_text(mask_file);
      if (hem_shift != 0) {
        if (!mask.empty()) throw CLI::ValidationError("--hem-shift", "cannot be combined with --mask");
        std::vector<char> buf(256);
        size_t needed = 0;
        check(wgv_default_mask(infer_data.c_str(), sample.c_str(), hem_shift, buf.data(), buf.size(), &needed));
        mask = buf.data();
      }
      check(wgv_pipeline_infer(p.ptr, infer_data.c_str(), sample.c_str(), mask.empty() ? nullptr : mask.c_str(),
                               infer_out.c_str()));
      std::printf("%s/%s.json\n", infer_out.c_str(), sample.c_str());
    } else if (*eval) {
      PipelineHandle p;
      if (!identity) eval_ckpt.load(p);
      if (unpair_path.empty()) unpair_path = pair_dir + "/manifest_unpair.json";
      check(wgv_evaluate(p.ptr, pair_dir.c_str(), unpair_path.c_str(), embedder_seed, threads, identity ? 1 : 0,
                         report.c_str(), csv.empty() ? nullptr : csv.c_str()));
      std::printf("%s\n", report.c_str());
    } else if (*serve) {
      PipelineHandle p;
      serve_ckpt.load(p);
      check(wgv_server_new(p.ptr, catalog.c_str(), &g_server));
      int bound = 0;
      check(wgv_server_bind(g_server, host.c_str(), port, &bound));
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::printf("listening on %s:%d\n", host.c_str(), bound);
      std::fflush(stdout);
      const wgv_status s = wgv_server_run(g_server);
      wgv_server_free(g_server);
      g_server = nullptr;
      check(s);
    }
  } catch (const CLI::ValidationError& e) {
    std::fprintf(stderr, "ERROR Usage: %s\n", e.what());
    return kUsageError;
  } catch (const Failure& f) {
    std::fprintf(stderr, "ERROR %s: %s\n", wgv_status_name(f.status), wgv_last_error());
    return kRuntimeError;
  }
  return 0;
}
