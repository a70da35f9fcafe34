#include <cstdlib>
#include <fstream>
#include <thread>

#include "app/config.hpp"
#include "app/service.hpp"
#include "app/training.hpp"
#include "data/loader.hpp"
#include "data/synthetic.hpp"
#include "support.hpp"
#include "wgviton/wgviton.h"

// After Eigen: <resolv.h> defines a macro named _res.
#include <httplib.h>

namespace wgv {
namespace {

using nlohmann::json;

TrainingConfig small_config() {
  TrainingConfig cfg;
  cfg.wgpgm.widths = {8, 16, 16};
  cfg.wgpgm.d_width = 8;
  cfg.scwm.widths = {8, 16};
  cfg.tom.widths = {8, 16};
  cfg.tom.d_width = 8;
  return cfg;
}

TEST(Config, SerializeParseRoundTrip) {
  TrainingConfig cfg = small_config();
  cfg.batch_size = 3;
  cfg.seed = 77;
  cfg.data_dir = "/tmp/some data";
  cfg.scwm.lambda_reg = 0.125;
  cfg.tom.lr = 3.5e-4;
  EXPECT_EQ(TrainingConfig::parse(cfg.serialize()), cfg);
  for (const auto& key : cfg.keys()) {
    TrainingConfig other;
    other.set(key, cfg.get(key));
    EXPECT_EQ(other.get(key), cfg.get(key)) << key;
  }
}

TEST(Config, FileRoundTripWithComments) {
  test::TempDir d("cfg");
  const TrainingConfig cfg = small_config();
  cfg.save(d / "train.cfg");
  {
    std::ofstream out(d / "train.cfg", std::ios::app);
    out << "\n# trailing comment\n\n";
  }
  EXPECT_EQ(TrainingConfig::load(d / "train.cfg"), cfg);
}

TEST(Config, InvalidEntries) {
  TrainingConfig cfg;
  EXPECT_WGV_ERROR(cfg.set("no_such_key", "1"), ErrorCode::InvalidConfig);
  EXPECT_WGV_ERROR(cfg.set("batch_size", "many"), ErrorCode::InvalidConfig);
  EXPECT_WGV_ERROR(cfg.set("deterministic", "maybe"), ErrorCode::InvalidConfig);
  EXPECT_WGV_ERROR(TrainingConfig::parse("epochs 3\n"), ErrorCode::InvalidConfig);
  cfg.batch_size = 0;
  EXPECT_WGV_ERROR(cfg.validate(), ErrorCode::InvalidConfig);
  cfg = TrainingConfig{};
  cfg.wgpgm.lambda_ce = -1;
  EXPECT_THROW(cfg.validate(), Error);
  EXPECT_NO_THROW(TrainingConfig{}.validate());
}

TEST(OutputLock, SecondClaimIsLocked) {
  test::TempDir d("lock");
  {
    OutputLock first(d.path());
    EXPECT_TRUE(std::filesystem::exists(d / ".lock"));
    EXPECT_WGV_ERROR(OutputLock second(d.path()), ErrorCode::Locked);
  }
  EXPECT_FALSE(std::filesystem::exists(d / ".lock"));
  EXPECT_NO_THROW(OutputLock again(d.path()));
}

TEST(HttpStatus, Mapping) {
  EXPECT_EQ(http_status(ErrorCode::DimensionError), 400);
  EXPECT_EQ(http_status(ErrorCode::NonBinaryError), 400);
  EXPECT_EQ(http_status(ErrorCode::InvalidArgument), 400);
  EXPECT_EQ(http_status(ErrorCode::UnknownId), 404);
  EXPECT_EQ(http_status(ErrorCode::IoError), 500);
}

// Untrained small models over a six-sample catalog, served on a free port.
class ServiceFixture : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new test::TempDir("service");
    catalog_ = synth::gen_synthetic_dataset(6, kDeskResolution, 31, dir_->path(), Split::TestPair);
    const TrainingConfig cfg = small_config();
    models_ = new PipelineModels;
    models_->parsing = wgpgm::Model(cfg.wgpgm, 1);
    models_->warp = scwm::Model(cfg.scwm, kDeskResolution, 1);
    models_->synth = tom::Model(cfg.tom, 1);
    models_->resolution = kDeskResolution;
    service_ = new TryOnService(*models_, catalog_);
    port_ = service_->bind("127.0.0.1", 0);
    thread_ = new std::thread([] { service_->run(); });
    httplib::Client probe("127.0.0.1", port_);
    for (int i = 0; i < 100 && !probe.Get("/healthz"); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  static void TearDownTestSuite() {
    service_->stop();
    thread_->join();
    delete thread_;
    delete service_;
    delete models_;
    delete dir_;
  }

  static httplib::Result post(const json& body) {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(60);
    return c.Post("/tryon", body.dump(), "application/json");
  }
  static httplib::Result get(const std::string& path) { return httplib::Client("127.0.0.1", port_).Get(path); }

  static inline test::TempDir* dir_ = nullptr;
  static inline DatasetManifest catalog_;
  static inline PipelineModels* models_ = nullptr;
  static inline TryOnService* service_ = nullptr;
  static inline std::thread* thread_ = nullptr;
  static inline int port_ = 0;
};

TEST_F(ServiceFixture, Healthz) {
  const auto r = get("/healthz");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  EXPECT_EQ(json::parse(r->body), json::parse(R"({"status":"ok"})"));
}

TEST_F(ServiceFixture, CatalogListsEverything) {
  const auto r = get("/catalog");
  ASSERT_TRUE(r);
  ASSERT_EQ(r->status, 200);
  const json j = json::parse(r->body);
  EXPECT_EQ(j["resolution"], "64x48");
  EXPECT_EQ(j["models"].size(), 6u);
  EXPECT_EQ(j["tops"].size(), 6u);
  for (const auto& m : j["models"]) {
    EXPECT_TRUE(m.contains("thumbnail"));
    EXPECT_TRUE(m.contains("top_id"));
    EXPECT_TRUE(m.contains("bottom_id"));
  }
  const auto thumb = get("/files/" + j["models"][0]["thumbnail"].get<std::string>());
  ASSERT_TRUE(thumb);
  EXPECT_EQ(thumb->status, 200);
  EXPECT_EQ(thumb->body.substr(1, 3), "PNG");
}

TEST_F(ServiceFixture, DefaultMaskIsSampleHem) {
  const auto r = get("/mask/default?model_id=s00001");
  ASSERT_TRUE(r);
  ASSERT_EQ(r->status, 200);
  const json j = json::parse(r->body);
  EXPECT_EQ(j["type"], "hem");
  EXPECT_EQ(j["hem_row"], build_wearing_guide(load_parsing(catalog_, "s00001")).hem_row);
  const auto missing = get("/mask/default?model_id=nobody");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
}

TEST_F(ServiceFixture, WrongMaskResolutionIsDimensionError) {
  const json body{{"model_id", "s00000"}, {"top_id", "s00001"}, {"mask", encode_rle(HemMask{{32, 24}, 10}.expand())}};
  const auto r = post(body);
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 400);
  const json j = json::parse(r->body);
  EXPECT_EQ(j["error"], "DimensionError");
  EXPECT_TRUE(j.contains("timing_ms"));
}

TEST_F(ServiceFixture, NonBinaryMaskIsRejected) {
  json bitmap{{"type", "bitmap"}, {"height", 64}, {"width", 48}};
  std::vector<int> bits(64 * 48, 0);
  bits[7] = 3;
  bitmap["bits"] = bits;
  const auto r = post({{"model_id", "s00000"}, {"top_id", "s00000"}, {"mask", bitmap}});
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 400);
  EXPECT_EQ(json::parse(r->body)["error"], "NonBinaryError");
}

TEST_F(ServiceFixture, UnknownIdsAre404) {
  for (const json& body : {json{{"model_id", "zzz"}, {"top_id", "s00000"}},
                           json{{"model_id", "s00000"}, {"top_id", "zzz"}},
                           json{{"model_id", "s00000"}, {"top_id", "s00000"}, {"bottom_id", "zzz"}}}) {
    const auto r = post(body);
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 404) << body.dump();
    EXPECT_EQ(json::parse(r->body)["error"], "UnknownId");
  }
}

TEST_F(ServiceFixture, MalformedBodyIs400) {
  httplib::Client c("127.0.0.1", port_);
  const auto r = c.Post("/tryon", "{not json", "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 400);
}

TEST_F(ServiceFixture, RepeatedTryOnIsByteIdentical) {
  std::optional<std::string> bottom;
  for (const auto& e : catalog_.samples)
    if (e.bottom_id) bottom = *e.bottom_id;
  json body{{"model_id", "s00002"}, {"top_id", "s00003"}, {"want_intermediates", true},
            {"mask", encode_hem(HemMask{kDeskResolution, 30})}};
  if (bottom) body["bottom_id"] = *bottom;
  const auto a = post(body), b = post(body);
  ASSERT_TRUE(a && b);
  ASSERT_EQ(a->status, 200) << a->body;
  const json ja = json::parse(a->body), jb = json::parse(b->body);
  EXPECT_EQ(ja["final"], jb["final"]);
  EXPECT_EQ(ja["parsing"], jb["parsing"]);
  EXPECT_TRUE(ja["timing_ms"].is_number());
  for (const char* k : {"final", "parsing", "warped_top", "warped_bottom"}) EXPECT_TRUE(ja.contains(k)) << k;
}

TEST_F(ServiceFixture, DefaultMaskUsedWhenOmitted) {
  const auto r = post({{"model_id", "s00000"}, {"top_id", "s00000"}});
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  EXPECT_FALSE(json::parse(r->body).contains("parsing"));
}

TEST_F(ServiceFixture, ConcurrentRequestsAgree) {
  const json body{{"model_id", "s00004"}, {"top_id", "s00005"}};
  std::vector<std::string> finals(4);
  std::vector<std::thread> workers;
  for (int i = 0; i < 4; ++i)
    workers.emplace_back([&, i] {
      const auto r = post(body);
      if (r && r->status == 200) finals[i] = json::parse(r->body)["final"];
    });
  for (auto& w : workers) w.join();
  for (const auto& f : finals) {
    EXPECT_FALSE(f.empty());
    EXPECT_EQ(f, finals[0]);
  }
}

// C interface

TEST(CApi, StatusNamesAndErrors) {
  EXPECT_STREQ(wgv_status_name(WGV_ERR_DIMENSION), "DimensionError");
  EXPECT_STREQ(wgv_status_name(WGV_OK), "Ok");
  wgv_config* cfg = nullptr;
  ASSERT_EQ(wgv_config_new(&cfg), WGV_OK);
  EXPECT_STREQ(wgv_last_error(), "");
  EXPECT_EQ(wgv_config_set(cfg, "bogus", "1"), WGV_ERR_INVALID_CONFIG);
  EXPECT_STRNE(wgv_last_error(), "");
  EXPECT_EQ(wgv_config_set(cfg, "epochs", "4"), WGV_OK);
  char buf[4];
  size_t needed = 0;
  EXPECT_EQ(wgv_config_get(cfg, "resolution", buf, sizeof buf, &needed), WGV_OK);
  EXPECT_EQ(needed, 6u);  // "64x48" plus terminator
  char big[32];
  EXPECT_EQ(wgv_config_get(cfg, "epochs", big, sizeof big, &needed), WGV_OK);
  EXPECT_STREQ(big, "4");
  wgv_config_free(cfg);
  EXPECT_EQ(wgv_config_new(nullptr), WGV_ERR_INVALID_ARGUMENT);
}

TEST(CApi, DatasetMaskAndIdentityEvaluation) {
  test::TempDir d("capi");
  const std::string pair = (d / "pair").string();
  ASSERT_EQ(wgv_generate_dataset(4, "64x48", 9, "test_pair", pair.c_str()), WGV_OK);
  EXPECT_EQ(wgv_generate_dataset(4, "64x50", 9, "test_pair", pair.c_str()), WGV_ERR_INVALID_RESOLUTION);
  EXPECT_EQ(wgv_generate_dataset(4, "64x48", 9, "holdout", pair.c_str()), WGV_ERR_INVALID_ARGUMENT);
  char path[1024];
  ASSERT_EQ(wgv_make_unpaired(pair.c_str(), 3, path, sizeof path), WGV_OK);
  EXPECT_TRUE(std::filesystem::exists(path));

  char mask[128];
  size_t needed = 0;
  ASSERT_EQ(wgv_default_mask(pair.c_str(), "s00000", -5, mask, sizeof mask, &needed), WGV_OK);
  const json m = json::parse(mask);
  const DatasetManifest man = DatasetManifest::load(pair);
  EXPECT_EQ(m["hem_row"], std::max(0, build_wearing_guide(load_parsing(man, "s00000")).hem_row - 5));
  EXPECT_EQ(wgv_default_mask(pair.c_str(), "nobody", 0, mask, sizeof mask, &needed), WGV_ERR_UNKNOWN_ID);

  const std::string report = (d / "report.json").string();
  ASSERT_EQ(wgv_evaluate(nullptr, pair.c_str(), path, 7, 2, 1, report.c_str(), nullptr), WGV_OK) << wgv_last_error();
  std::ifstream in(report);
  const json r = json::parse(in);
  EXPECT_EQ(r.size(), 8u);
  EXPECT_NEAR(r["ssim_pair"].get<double>(), 1.0, 1e-6);
  EXPECT_EQ(wgv_evaluate(nullptr, pair.c_str(), path, 7, 1, 0, report.c_str(), nullptr), WGV_ERR_INVALID_ARGUMENT);
}

TEST(CApi, PipelineLoadFailures) {
  test::TempDir d("capi_pipe");
  wgv_pipeline* p = nullptr;
  const std::string missing = (d / "missing.ckpt").string();
  EXPECT_EQ(wgv_pipeline_load(missing.c_str(), missing.c_str(), missing.c_str(), &p), WGV_ERR_IO);
  EXPECT_EQ(p, nullptr);
  {
    std::ofstream junk(d / "junk.ckpt", std::ios::binary);
    junk << "not a checkpoint";
  }
  const std::string junk = (d / "junk.ckpt").string();
  EXPECT_EQ(wgv_pipeline_load(junk.c_str(), junk.c_str(), junk.c_str(), &p), WGV_ERR_CORRUPT_FILE);
}

TEST(CApi, TrainRefusesLockedOutput) {
  test::TempDir d("capi_lock");
  const std::string data = (d / "data").string();
  ASSERT_EQ(wgv_generate_dataset(2, "64x48", 1, "train", data.c_str()), WGV_OK);
  std::filesystem::create_directories(d / "out");
  { std::ofstream(d / "out" / ".lock") << "1"; }
  wgv_config* cfg = nullptr;
  wgv_config_new(&cfg);
  wgv_config_set(cfg, "out_dir", (d / "out").string().c_str());
  wgv_config_set(cfg, "epochs", "0");
  char path[1024];
  EXPECT_EQ(wgv_train("wgpgm", data.c_str(), cfg, nullptr, nullptr, nullptr, path, sizeof path), WGV_ERR_LOCKED);
  EXPECT_EQ(wgv_train("gan", data.c_str(), cfg, nullptr, nullptr, nullptr, path, sizeof path), WGV_ERR_INVALID_ARGUMENT);
  wgv_config_free(cfg);
}

// Command-line tool

int run_cli(const std::string& args) {
  const std::string cmd = std::string(WGV_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run_cli("train bogus --data /tmp"), 1);
  EXPECT_EQ(run_cli("gen-data --count 3"), 1);
  EXPECT_EQ(run_cli("no-such-command"), 1);
  EXPECT_EQ(run_cli("--help"), 0);
}

TEST(Cli, GenerateTrainInferEvaluate) {
  test::TempDir d("cli");
  const std::string data = (d / "data").string(), out = (d / "ckpt").string();
  const std::string train = (d / "train").string();
  ASSERT_EQ(run_cli("gen-data --count 4 --seed 5 --split test_pair --with-unpaired --out " + data), 0);
  EXPECT_TRUE(std::filesystem::exists(d / "data" / "manifest.json"));
  EXPECT_TRUE(std::filesystem::exists(d / "data" / "manifest_unpair.json"));
  ASSERT_EQ(run_cli("gen-data --count 3 --seed 6 --out " + train), 0);
  EXPECT_EQ(run_cli("train wgpgm --epochs 0 --data " + data + " --out " + out), 2);

  const std::string small = " --set wgpgm.widths=8,16,16 --set wgpgm.d_width=8 --set scwm.widths=8,16"
                            " --set tom.widths=8,16 --set tom.d_width=8";
  for (const char* module : {"wgpgm", "scwm", "tom"})
    ASSERT_EQ(run_cli(std::string("train ") + module + " --epochs 0 --data " + train + " --out " + out + small), 0)
        << module;
  for (const char* f : {"wgpgm.ckpt", "scwm.ckpt", "tom.ckpt"}) EXPECT_TRUE(std::filesystem::exists(d / "ckpt" / f));
  for (const auto& e : std::filesystem::directory_iterator(d / "ckpt"))
    EXPECT_NE(e.path().extension(), ".partial") << e.path();
  EXPECT_FALSE(std::filesystem::exists(d / "ckpt" / ".lock"));

  ASSERT_EQ(run_cli("infer --ckpt-dir " + out + " --data " + data + " --sample s00001 --hem-shift -3 --out " +
                    (d / "infer").string()),
            0);
  EXPECT_TRUE(std::filesystem::exists(d / "infer" / "s00001.json"));
  ASSERT_EQ(run_cli("eval --ckpt-dir " + out + " --pair " + data + " --out " + (d / "report.json").string() +
                    " --csv " + (d / "per_sample.csv").string()),
            0);
  EXPECT_TRUE(std::filesystem::exists(d / "report.json"));
  EXPECT_TRUE(std::filesystem::exists(d / "per_sample.csv"));
}

TEST(Cli, RuntimeErrorsExitTwo) {
  test::TempDir d("cli_err");
  EXPECT_EQ(run_cli("train wgpgm --data " + (d / "absent").string() + " --out " + (d / "o").string()), 2);
  EXPECT_EQ(run_cli("gen-data --count 2 --resolution 64x50 --out " + (d / "x").string()), 2);
  EXPECT_EQ(run_cli("infer --ckpt-dir " + (d / "none").string() + " --data " + (d / "none").string() +
                    " --sample a --out " + (d / "y").string()),
            2);
}

}  // namespace
}  // namespace wgv
