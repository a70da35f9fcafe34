#include "app/evaluate.hpp"

#include <optional>
#include <thread>

#include "common/error.hpp"
#include "data/loader.hpp"

namespace wgv {
namespace {

struct Outcome {
  std::optional<metrics::PairedImage> image;
  std::optional<metrics::SampleFailure> failure;
};

template <class F>
void run_parallel(std::size_t n, int threads, F job) {
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(threads < 1 ? 1 : threads, n));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) job(i);
    });
  for (std::size_t i = 0; i < n; i += workers) job(i);
  for (auto& t : pool) t.join();
}

Outcome run_one(const PipelineModels* models, const DatasetManifest& manifest, const std::string& id, bool paired,
                bool identity) {
  Outcome out;
  try {
    const SampleRecord s = load_sample(manifest, id);
    metrics::PairedImage img{id, s.model_image, s.model_image};
    if (!identity) {
      if (!models) fail(ErrorCode::UninitializedModel, "evaluation needs trained checkpoints");
      const HemMask hem = paired ? build_wearing_guide(s.parsing) : mid_hip_hem(s.keypoints, s.resolution());
      img.prediction = full_pipeline_infer(TryOnInputs::from_sample(s, hem.expand()), *models).final_image;
    }
    out.image = std::move(img);
  } catch (const Error& e) {
    out.failure = metrics::SampleFailure{id, paired ? "test_pair" : "test_unpair", std::string(to_string(e.code())),
                                         e.what()};
  }
  return out;
}

}  // namespace

metrics::MetricsReport evaluate_split(const PipelineModels* models, const DatasetManifest& pair,
                                      const DatasetManifest& unpair, const metrics::FeatureEmbedder& embedder,
                                      const EvalOptions& options) {
  if (pair.resolution != unpair.resolution)
    fail(ErrorCode::SchemaMismatch, "paired and unpaired splits differ in resolution");
  if (models && models->resolution != pair.resolution)
    fail(ErrorCode::SchemaMismatch, "checkpoints were trained at " + models->resolution.to_string() +
                                        ", the test split is " + pair.resolution.to_string());
  if (!(pair.schema == LabelSchema::standard()) || !(unpair.schema == LabelSchema::standard()))
    fail(ErrorCode::SchemaMismatch, "test manifests use a different label schema");
  std::vector<Outcome> po(pair.samples.size()), uo(unpair.samples.size());
  run_parallel(po.size(), options.threads, [&](std::size_t i) {
    po[i] = run_one(models, pair, pair.samples[i].id, true, options.identity);
  });
  run_parallel(uo.size(), options.threads, [&](std::size_t i) {
    uo[i] = run_one(models, unpair, unpair.samples[i].id, false, options.identity);
  });

  std::vector<metrics::PairedImage> paired;
  std::vector<ImageRGB> unpaired;
  std::vector<metrics::SampleFailure> failures;
  for (auto& o : po) {
    if (o.image) paired.push_back(std::move(*o.image));
    else failures.push_back(*o.failure);
  }
  for (auto& o : uo) {
    if (o.image) unpaired.push_back(std::move(o.image->prediction));
    else failures.push_back(*o.failure);
  }
  metrics::MetricsReport report = metrics::score(paired, unpaired, embedder, options.threads);
  report.resolution = pair.resolution;
  report.failures = std::move(failures);
  return report;
}

}  // namespace wgv
