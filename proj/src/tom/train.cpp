#include <cstring>
#include <optional>

#include "common/error.hpp"
#include "data/cache.hpp"
#include "data/preprocess.hpp"
#include "guide/wearing_guide.hpp"
#include "nn/checkpoint.hpp"
#include "nn/ops.hpp"
#include "scwm/scwm.hpp"
#include "tom/tom.hpp"
#include "wgpgm/wgpgm.hpp"

namespace wgv::tom {
namespace {

struct Upstream {
  wgpgm::Model parsing;
  scwm::Model warp;
};

struct Batch {
  nn::Tensor input;
  nn::Tensor agnostic;
  nn::Tensor preserve;
  nn::Tensor warped_top, warped_bottom;
  nn::Tensor target;
  std::vector<std::string> ids;
};

// Worn garment pixels cut out of the model image: the warp a perfect
// warping module would produce.
ImageRGB oracle_layer(const SampleRecord& s, GarmentKind kind) {
  const scwm::WornTarget w = scwm::worn_target(s, kind);
  ImageRGB out(s.resolution());
  if (!w.present) return out;
  const std::size_t P = w.region.size();
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < P; ++i) out.data()[c * P + i] = w.color.data()[c * P + i] * w.region[i];
  return out;
}

Batch make_batch(const SampleCache& cache, const std::vector<std::size_t>& indices, const Upstream* upstream) {
  const Resolution res = cache.resolution();
  const int n = static_cast<int>(indices.size());
  const std::size_t P = res.pixels();
  const nn::Shape s3{n, 3, res.height, res.width};
  Batch b;
  b.input = nn::Tensor(nn::Shape{n, kInputChannels, res.height, res.width});
  b.agnostic = nn::Tensor(s3);
  b.preserve = nn::Tensor(nn::Shape{n, 1, res.height, res.width});
  b.warped_top = nn::Tensor(s3);
  b.warped_bottom = nn::Tensor(s3);
  b.target = nn::Tensor(s3);
  const GarmentRecord no_bottom = empty_garment(res, GarmentKind::Bottom);
  for (int k = 0; k < n; ++k) {
    const SampleRecord s = cache[indices[k]].expand();
    const PoseMap pose = pose_to_heatmaps(s.keypoints, default_pose_sigma(res), res);
    ParsingMap parsing = s.parsing;
    ImageRGB top, bottom;
    if (upstream) {
      const GarmentRecord& garment_bt = s.bottom ? *s.bottom : no_bottom;
      const WearingGuideMask mask = build_wearing_guide(s.parsing).expand();
      parsing = wgpgm::forward(upstream->parsing, s.agnostic_parsing, pose, s.top.image, garment_bt.image, mask);
      const ParsingMap hard = ParsingMap::from_labels(res, parsing.labels());
      const scwm::Thetas th = scwm::forward(upstream->warp, hard, pose, s.top, garment_bt);
      top = scwm::apply_warp(s.top, upstream->warp.basis().apply(th.top)).layer();
      bottom = scwm::apply_warp(garment_bt, upstream->warp.basis().apply(th.bottom)).layer();
    } else {
      top = oracle_layer(s, GarmentKind::Top);
      bottom = oracle_layer(s, GarmentKind::Bottom);
    }
    pack_input(s.agnostic_image, pose, parsing, top, bottom, b.input.sample(k));
    std::memcpy(b.agnostic.sample(k), s.agnostic_image.data().data(), sizeof(float) * 3 * P);
    std::memcpy(b.warped_top.sample(k), top.data().data(), sizeof(float) * 3 * P);
    std::memcpy(b.warped_bottom.sample(k), bottom.data().data(), sizeof(float) * 3 * P);
    std::memcpy(b.target.sample(k), s.model_image.data().data(), sizeof(float) * 3 * P);
    const PreserveMask keep = PreserveMask::from_agnostic(s.agnostic_parsing);
    for (std::size_t i = 0; i < P; ++i) b.preserve.sample(k)[i] = keep.bits[i];
    b.ids.push_back(s.id);
  }
  return b;
}

nn::AdamOptions adam_options(const TomSettings& s) {
  return {static_cast<float>(s.lr), static_cast<float>(s.beta1), static_cast<float>(s.beta2), 1e-8f};
}

}  // namespace

std::filesystem::path train(const DatasetManifest& manifest, const TrainingConfig& cfg, const TrainOptions& options) {
  cfg.validate();
  const TomSettings& st = cfg.tom;
  LossWeights weights = LossWeights::from(st);
  weights.validate();
  if (manifest.split != Split::Train) fail(ErrorCode::InvalidArgument, "TOM trains on a train split");
  if (manifest.samples.empty()) fail(ErrorCode::EmptyDataset, "training manifest has no samples");
  if (manifest.resolution != cfg.resolution)
    fail(ErrorCode::InvalidConfig, "dataset resolution " + manifest.resolution.to_string() +
                                       " differs from configured " + cfg.resolution.to_string());
  std::optional<Upstream> upstream;
  if (st.predicted_inputs) {
    if (st.wgpgm_checkpoint.empty() || st.scwm_checkpoint.empty())
      fail(ErrorCode::InvalidConfig, "tom.predicted_inputs needs tom.wgpgm_checkpoint and tom.scwm_checkpoint");
    upstream = Upstream{wgpgm::load(st.wgpgm_checkpoint), scwm::load(st.scwm_checkpoint)};
    if (upstream->warp.resolution() != cfg.resolution)
      fail(ErrorCode::SchemaMismatch, "SCWM checkpoint resolution differs from the configured one");
  }

  const std::filesystem::path out_dir = output_dir(cfg);
  OutputLock lock(out_dir);

  Model model(st, cfg.seed);
  nn::Adam g_opt(model.g_params, adam_options(st));
  nn::Adam d_opt(model.d_params, adam_options(st));
  std::int64_t step = 0;
  if (options.resume) {
    const nn::Checkpoint c = nn::Checkpoint::load(*options.resume, LabelSchema::standard().hash(), kComponent);
    c.get_params("g", model.g_params);
    c.get_params("d", model.d_params);
    g_opt.load(c, "adam_g");
    d_opt.load(c, "adam_d");
    step = c.step;
  }

  const SampleCache cache = SampleCache::load(manifest);
  const BatchSchedule schedule(cache.size(), cfg.batch_size, data_order_seed(cfg));
  const std::int64_t total = total_steps(cfg, schedule);
  LossLog log(out_dir / "tom_loss.csv", {"l1", "adv", "fm", "total", "d"}, step);

  for (; step < total; ++step) {
    const Batch b = make_batch(cache, schedule.batch(step), upstream ? &*upstream : nullptr);
    nn::Tape tg(true);
    nn::Var input = tg.constant(b.input);
    nn::Var y = model.synthesize(tg, input);
    nn::Var final_image = compose(tg, tg.constant(b.agnostic), tg.constant(b.preserve), nn::slice_channels(tg, y, 0, 3),
                                  nn::slice_channels(tg, y, 3, 4), nn::slice_channels(tg, y, 4, 5),
                                  tg.constant(b.warped_top), tg.constant(b.warped_bottom));
    nn::Tensor real_input;
    {
      nn::Tape t(false);
      real_input = nn::concat_channels(t, {t.constant(b.input), t.constant(b.target)})->value;
    }

    double d_value = 0.0;
    {
      nn::Tape td(true);
      const nn::PatchOutput dr = model.d.forward(td, td.constant(real_input));
      const nn::PatchOutput df =
          model.d.forward(td, nn::concat_channels(td, {td.constant(b.input), td.constant(final_image->value)}));
      nn::Var ld = nn::lsgan_d(td, dr.scores, df.scores);
      d_value = ld->value.item();
      check_finite(d_value, "discriminator", step, b.ids);
      td.backward(ld);
      d_opt.step();
    }

    nn::Var l1 = nn::l1_mean(tg, final_image, b.target);
    nn::Var adv, fm;
    {
      nn::FrozenParams frozen(tg);
      const nn::PatchOutput dr = model.d.forward(tg, tg.constant(real_input));
      const nn::PatchOutput df = model.d.forward(tg, nn::concat_channels(tg, {input, final_image}));
      adv = nn::lsgan_g(tg, df.scores);
      fm = nn::feature_matching(tg, df.features, dr.features);
    }
    nn::Var loss = nn::weighted_sum(
        tg, {l1, adv, fm},
        {static_cast<float>(weights.l1), static_cast<float>(weights.adv), static_cast<float>(weights.fm)});
    check_finite(loss->value.item(), "generator", step, b.ids);
    tg.backward(loss);
    g_opt.step();

    const std::int64_t done = step + 1;
    const std::vector<double> row{l1->value.item(), adv->value.item(), fm->value.item(), loss->value.item(), d_value};
    if (done % cfg.log_interval == 0 || done == total) log.row(done, row);
    if (options.progress)
      options.progress({done, total,
                        {{"l1", row[0]}, {"adv", row[1]}, {"fm", row[2]}, {"total", row[3]}, {"d", row[4]}}});
    if (cfg.checkpoint_interval > 0 && done % cfg.checkpoint_interval == 0 && done != total)
      save(step_checkpoint_path(out_dir, kComponent, done), model, &g_opt, &d_opt, cfg, done);
  }

  const std::filesystem::path final_path = out_dir / "tom.ckpt";
  save(final_path, model, &g_opt, &d_opt, cfg, step);
  return final_path;
}

}  // namespace wgv::tom
