#include <cstring>
#include <optional>

#include "common/error.hpp"
#include "data/cache.hpp"
#include "data/preprocess.hpp"
#include "guide/wearing_guide.hpp"
#include "nn/checkpoint.hpp"
#include "nn/ops.hpp"
#include "scwm/scwm.hpp"
#include "scwm/warp_ops.hpp"
#include "wgpgm/wgpgm.hpp"

namespace wgv::scwm {
namespace {

struct Batch {
  nn::Tensor model_in;
  nn::Tensor top_img, bt_img;          // garment branch inputs
  nn::Tensor top_src, bt_src;          // image + seg planes to warp
  nn::Tensor top_target, bt_target;    // worn color + seg planes
  nn::Tensor top_region, bt_region;
  std::vector<std::string> ids;
};

void put_planes(nn::Tensor& dst, int n, int first, const float* src, int planes) {
  std::memcpy(dst.plane(n, first), src, sizeof(float) * planes * dst.shape().plane());
}

// One-hot slices of the generator's arg-max parsing.
std::pair<std::vector<float>, std::vector<float>> predicted_slices(const wgpgm::Model& g, const SampleRecord& s,
                                                                   const PoseMap& pose, const GarmentRecord& bottom) {
  const WearingGuideMask mask = build_wearing_guide(s.parsing).expand();
  const ParsingMap prob = wgpgm::forward(g, s.agnostic_parsing, pose, s.top.image, bottom.image, mask);
  const ParsingMap hard = ParsingMap::from_labels(prob.resolution(), prob.labels());
  return {hard.slice_sum({Role::TopTorso, Role::TopSleeves}), hard.slice_sum({Role::BottomHips, Role::BottomLegs})};
}

Batch make_batch(const SampleCache& cache, const std::vector<std::size_t>& indices, const wgpgm::Model* teacher) {
  const Resolution res = cache.resolution();
  const int n = static_cast<int>(indices.size());
  const nn::Shape s3{n, 3, res.height, res.width}, s6{n, 6, res.height, res.width}, s1{n, 1, res.height, res.width};
  Batch b;
  b.model_in = nn::Tensor(nn::Shape{n, kModelChannels, res.height, res.width});
  b.top_img = nn::Tensor(s3);
  b.bt_img = nn::Tensor(s3);
  b.top_src = nn::Tensor(s6);
  b.bt_src = nn::Tensor(s6);
  b.top_target = nn::Tensor(s6);
  b.bt_target = nn::Tensor(s6);
  b.top_region = nn::Tensor(s1);
  b.bt_region = nn::Tensor(s1);
  const GarmentRecord no_bottom = empty_garment(res, GarmentKind::Bottom);
  for (int k = 0; k < n; ++k) {
    const SampleRecord s = cache[indices[k]].expand();
    const GarmentRecord& bottom = s.bottom ? *s.bottom : no_bottom;
    const PoseMap pose = pose_to_heatmaps(s.keypoints, default_pose_sigma(res), res);
    const auto [ts, bs] = teacher ? predicted_slices(*teacher, s, pose, bottom)
                                  : std::pair{s.parsing.slice_sum({Role::TopTorso, Role::TopSleeves}),
                                              s.parsing.slice_sum({Role::BottomHips, Role::BottomLegs})};
    put_planes(b.model_in, k, 0, ts.data(), 1);
    put_planes(b.model_in, k, 1, bs.data(), 1);
    put_planes(b.model_in, k, 2, pose.values.data(), kNumKeypoints);
    put_planes(b.top_img, k, 0, s.top.image.data().data(), 3);
    put_planes(b.bt_img, k, 0, bottom.image.data().data(), 3);
    put_planes(b.top_src, k, 0, s.top.image.data().data(), 3);
    put_planes(b.top_src, k, 3, s.top.seg_one_hot().data(), 3);
    put_planes(b.bt_src, k, 0, bottom.image.data().data(), 3);
    put_planes(b.bt_src, k, 3, bottom.seg_one_hot().data(), 3);
    const WornTarget wt = worn_target(s, GarmentKind::Top);
    if (!wt.present) fail(ErrorCode::EmptyTargetRegion, "sample " + s.id + " shows no top garment");
    put_planes(b.top_target, k, 0, wt.color.data().data(), 3);
    put_planes(b.top_target, k, 3, wt.seg.data(), 3);
    put_planes(b.top_region, k, 0, wt.region.data(), 1);
    const WornTarget wb = worn_target(s, GarmentKind::Bottom);
    put_planes(b.bt_target, k, 0, wb.color.data().data(), 3);
    put_planes(b.bt_target, k, 3, wb.seg.data(), 3);
    if (wb.present) put_planes(b.bt_region, k, 0, wb.region.data(), 1);
    b.ids.push_back(s.id);
  }
  return b;
}

nn::Tensor planes(const nn::Tensor& x, int begin, int end) {
  nn::Tape t(false);
  return nn::slice_channels(t, t.constant(x), begin, end)->value;
}

}  // namespace

std::filesystem::path train(const DatasetManifest& manifest, const TrainingConfig& cfg, const TrainOptions& options) {
  cfg.validate();
  const ScwmSettings& st = cfg.scwm;
  if (manifest.split != Split::Train) fail(ErrorCode::InvalidArgument, "SCWM trains on a train split");
  if (manifest.samples.empty()) fail(ErrorCode::EmptyDataset, "training manifest has no samples");
  if (manifest.resolution != cfg.resolution)
    fail(ErrorCode::InvalidConfig, "dataset resolution " + manifest.resolution.to_string() +
                                       " differs from configured " + cfg.resolution.to_string());
  std::optional<wgpgm::Model> teacher;
  if (st.predicted_parsing) {
    if (st.wgpgm_checkpoint.empty())
      fail(ErrorCode::InvalidConfig, "scwm.predicted_parsing needs scwm.wgpgm_checkpoint");
    teacher = wgpgm::load(st.wgpgm_checkpoint);
  }

  const std::filesystem::path out_dir = output_dir(cfg);
  OutputLock lock(out_dir);

  Model model(st, cfg.resolution, cfg.seed);
  nn::Adam opt(model.params, {static_cast<float>(st.lr), static_cast<float>(st.beta1), static_cast<float>(st.beta2),
                              1e-8f});
  std::int64_t step = 0;
  if (options.resume) {
    const nn::Checkpoint c = nn::Checkpoint::load(*options.resume, LabelSchema::standard().hash(), kComponent);
    c.get_params("net", model.params);
    opt.load(c, "adam");
    step = c.step;
  }

  const SampleCache cache = SampleCache::load(manifest);
  const BatchSchedule schedule(cache.size(), cfg.batch_size, data_order_seed(cfg));
  const std::int64_t total = total_steps(cfg, schedule);
  LossLog log(out_dir / "scwm_loss.csv", {"color_top", "seg_top", "color_bottom", "seg_bottom", "reg", "total"}, step);
  const float lc = static_cast<float>(st.lambda_color), ls = static_cast<float>(st.lambda_seg);

  for (; step < total; ++step) {
    const Batch b = make_batch(cache, schedule.batch(step), teacher ? &*teacher : nullptr);
    nn::Tape t(true);
    const auto [th_top, th_bt] =
        model.predict(t, t.constant(b.model_in), t.constant(b.top_img), t.constant(b.bt_img));
    nn::Var wt = grid_sample(t, t.constant(b.top_src), tps_grid(t, th_top, model.basis()));
    nn::Var wb = grid_sample(t, t.constant(b.bt_src), tps_grid(t, th_bt, model.basis()));
    nn::Var ct = nn::masked_l1(t, nn::slice_channels(t, wt, 0, 3), planes(b.top_target, 0, 3), b.top_region);
    nn::Var st_ = nn::masked_l1(t, nn::slice_channels(t, wt, 3, 6), planes(b.top_target, 3, 6), b.top_region);
    nn::Var cb = nn::masked_l1(t, nn::slice_channels(t, wb, 0, 3), planes(b.bt_target, 0, 3), b.bt_region);
    nn::Var sb = nn::masked_l1(t, nn::slice_channels(t, wb, 3, 6), planes(b.bt_target, 3, 6), b.bt_region);
    nn::Var reg = nn::weighted_sum(t, {nn::mean_square(t, th_top), nn::mean_square(t, th_bt)}, {1.0f, 1.0f});
    nn::Var fit = nn::weighted_sum(t, {ct, st_, cb, sb}, {lc, ls, lc, ls});
    nn::Var objective = nn::weighted_sum(t, {fit, reg}, {1.0f, static_cast<float>(st.lambda_reg)});
    check_finite(objective->value.item(), "warp", step, b.ids);
    t.backward(objective);
    opt.step();

    const std::int64_t done = step + 1;
    const std::vector<double> row{ct->value.item(), st_->value.item(), cb->value.item(), sb->value.item(),
                                  reg->value.item(), fit->value.item()};
    if (done % cfg.log_interval == 0 || done == total) log.row(done, row);
    if (options.progress)
      options.progress({done, total,
                        {{"color_top", row[0]}, {"seg_top", row[1]}, {"color_bottom", row[2]},
                         {"seg_bottom", row[3]}, {"reg", row[4]}, {"total", row[5]}}});
    if (cfg.checkpoint_interval > 0 && done % cfg.checkpoint_interval == 0 && done != total)
      save(step_checkpoint_path(out_dir, kComponent, done), model, &opt, cfg, done);
  }

  const std::filesystem::path final_path = out_dir / "scwm.ckpt";
  save(final_path, model, &opt, cfg, step);
  return final_path;
}

}  // namespace wgv::scwm
