#include <cstring>

#include "common/error.hpp"
#include "data/cache.hpp"
#include "data/preprocess.hpp"
#include "nn/ops.hpp"
#include "wgpgm/wgpgm.hpp"

namespace wgv::wgpgm {
namespace {

struct Batch {
  nn::Tensor cond;
  nn::Tensor target;
  nn::Tensor mask;
  std::vector<std::string> ids;
};

Batch make_batch(const SampleCache& cache, const std::vector<std::size_t>& indices) {
  const Resolution res = cache.resolution();
  const int n = static_cast<int>(indices.size());
  const std::size_t P = res.pixels();
  Batch b;
  b.cond = nn::Tensor(nn::Shape{n, kConditionChannels, res.height, res.width});
  b.target = nn::Tensor(nn::Shape{n, kNumClasses, res.height, res.width});
  b.mask = nn::Tensor(nn::Shape{n, 1, res.height, res.width});
  const GarmentRecord no_bottom = empty_garment(res, GarmentKind::Bottom);
  for (int k = 0; k < n; ++k) {
    const SampleRecord s = cache[indices[k]].expand();
    const PoseMap pose = pose_to_heatmaps(s.keypoints, default_pose_sigma(res), res);
    const WearingGuideMask mask = build_wearing_guide(s.parsing).expand();
    pack_condition(s.agnostic_parsing, pose, s.top.image, s.bottom ? s.bottom->image : no_bottom.image, mask,
                   b.cond.sample(k));
    std::memcpy(b.target.sample(k), s.parsing.values().data(), sizeof(float) * kNumClasses * P);
    for (std::size_t i = 0; i < P; ++i) b.mask.sample(k)[i] = mask.bits()[i] ? 1.0f : 0.0f;
    b.ids.push_back(s.id);
  }
  return b;
}

nn::AdamOptions adam_options(const WgpgmSettings& s) {
  return {static_cast<float>(s.lr), static_cast<float>(s.beta1), static_cast<float>(s.beta2), 1e-8f};
}

}  // namespace

std::filesystem::path train(const DatasetManifest& manifest, const TrainingConfig& cfg, const TrainOptions& options) {
  cfg.validate();
  LossWeights weights = LossWeights::from(cfg.wgpgm);
  weights.validate();
  if (manifest.split != Split::Train) fail(ErrorCode::InvalidArgument, "WGPGM trains on a train split");
  if (manifest.samples.empty()) fail(ErrorCode::EmptyDataset, "training manifest has no samples");
  if (manifest.resolution != cfg.resolution)
    fail(ErrorCode::InvalidConfig, "dataset resolution " + manifest.resolution.to_string() +
                                       " differs from configured " + cfg.resolution.to_string());

  const std::filesystem::path out_dir = output_dir(cfg);
  OutputLock lock(out_dir);

  Model model(cfg.wgpgm, cfg.seed);
  nn::Adam g_opt(model.g_params, adam_options(cfg.wgpgm));
  nn::Adam d_opt(model.d_params, adam_options(cfg.wgpgm));
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
  LossLog log(out_dir / "wgpgm_loss.csv", {"ce", "adv", "fm", "wg", "total", "d", "d_low"}, step);

  const int bottom_hips = index_of(Role::BottomHips);
  const int bottom_legs = index_of(Role::BottomLegs);
  const float lam_adv = static_cast<float>(weights.adv);
  const float lam_fm = static_cast<float>(weights.fm);

  for (; step < total; ++step) {
    const Batch batch = make_batch(cache, schedule.batch(step));
    nn::Tensor real_input;
    {
      nn::Tape t(false);
      real_input = nn::concat_channels(t, {t.constant(batch.cond), t.constant(batch.target)})->value;
    }

    nn::Tape tg(true);
    nn::Var cond = tg.constant(batch.cond);
    nn::Var prob = nn::softmax_channels(tg, model.generator.forward(tg, cond));

    // Discriminator update on the detached prediction.
    double d_value = 0.0, d_low_value = 0.0;
    {
      nn::Tape td(true);
      nn::Var real = td.constant(real_input);
      nn::Var fake = nn::concat_channels(td, {td.constant(batch.cond), td.constant(prob->value)});
      const nn::PatchOutput dr = model.d.forward(td, real);
      const nn::PatchOutput df = model.d.forward(td, fake);
      const nn::PatchOutput lr = model.d_low.forward(td, lower_body_crop(td, real));
      const nn::PatchOutput lf = model.d_low.forward(td, lower_body_crop(td, fake));
      nn::Var ld = nn::lsgan_d(td, dr.scores, df.scores);
      nn::Var ll = nn::lsgan_d(td, lr.scores, lf.scores);
      d_value = ld->value.item();
      d_low_value = ll->value.item();
      check_finite(d_value + d_low_value, "discriminator", step, batch.ids);
      td.backward(nn::weighted_sum(td, {ld, ll}, {1.0f, 1.0f}));
      d_opt.step();
    }

    // Generator update against the refreshed discriminators.
    nn::Var ce = nn::cross_entropy(tg, prob, batch.target);
    nn::Var bottom = nn::sum_channels(tg, prob, {bottom_hips, bottom_legs});
    nn::Var wg = nn::masked_abs_mean(tg, bottom, batch.mask);
    nn::Var adv, fm;
    {
      nn::FrozenParams frozen(tg);
      nn::Var real = tg.constant(real_input);
      nn::Var fake = nn::concat_channels(tg, {cond, prob});
      const nn::PatchOutput dr = model.d.forward(tg, real);
      const nn::PatchOutput df = model.d.forward(tg, fake);
      const nn::PatchOutput lr = model.d_low.forward(tg, lower_body_crop(tg, real));
      const nn::PatchOutput lf = model.d_low.forward(tg, lower_body_crop(tg, fake));
      adv = nn::weighted_sum(tg, {nn::lsgan_g(tg, df.scores), nn::lsgan_g(tg, lf.scores)}, {1.0f, 1.0f});
      fm = nn::weighted_sum(tg, {nn::feature_matching(tg, df.features, dr.features),
                                 nn::feature_matching(tg, lf.features, lr.features)},
                            {1.0f, 1.0f});
    }
    nn::Var loss = nn::weighted_sum(tg, {ce, adv, fm, wg},
                                    {static_cast<float>(weights.ce), lam_adv, lam_fm, static_cast<float>(weights.wg)});
    check_finite(loss->value.item(), "generator", step, batch.ids);
    tg.backward(loss);
    g_opt.step();

    const std::int64_t done = step + 1;
    const std::vector<double> row{ce->value.item(), adv->value.item(), fm->value.item(), wg->value.item(),
                                  loss->value.item(), d_value, d_low_value};
    if (done % cfg.log_interval == 0 || done == total) log.row(done, row);
    if (options.progress)
      options.progress({done, total,
                        {{"ce", row[0]}, {"adv", row[1]}, {"fm", row[2]}, {"wg", row[3]}, {"total", row[4]},
                         {"d", row[5]}, {"d_low", row[6]}}});
    if (cfg.checkpoint_interval > 0 && done % cfg.checkpoint_interval == 0 && done != total)
      save(step_checkpoint_path(out_dir, kComponent, done), model, &g_opt, &d_opt, cfg, done);
  }

  const std::filesystem::path final_path = out_dir / "wgpgm.ckpt";
  save(final_path, model, &g_opt, &d_opt, cfg, step);
  return final_path;
}

}  // namespace wgv::wgpgm
