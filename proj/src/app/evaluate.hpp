#pragma once

#include "app/pipeline.hpp"
#include "data/manifest.hpp"
#include "metrics/metrics.hpp"

namespace wgv {

struct EvalOptions {
  int threads = 1;
  // Score ground-truth images against themselves instead of running the models.
  bool identity = false;
};

// Paired samples use their ground-truth hem; unpaired ones the mid-hip hem.
// A sample whose inference fails is listed in the report's failures and left
// out of every aggregate. `models` may be null in identity mode.
metrics::MetricsReport evaluate_split(const PipelineModels* models, const DatasetManifest& pair,
                                      const DatasetManifest& unpair, const metrics::FeatureEmbedder& embedder,
                                      const EvalOptions& options = {});

}  // namespace wgv
