#include "app/pipeline.hpp"

#include <algorithm>
#include <fstream>

#include "common/error.hpp"
#include "common/png_io.hpp"
#include "data/preprocess.hpp"
#include "nn/checkpoint.hpp"

namespace wgv {
namespace {

Resolution checkpoint_resolution(const std::filesystem::path& path, const char* component) {
  const nn::Checkpoint c = nn::Checkpoint::load(path, LabelSchema::standard().hash(), component);
  return TrainingConfig::parse(c.config).resolution;
}

}  // namespace

PipelineModels PipelineModels::load(const PipelinePaths& paths) {
  const Resolution rg = checkpoint_resolution(paths.wgpgm, wgpgm::kComponent);
  const Resolution rw = checkpoint_resolution(paths.scwm, scwm::kComponent);
  const Resolution rt = checkpoint_resolution(paths.tom, tom::kComponent);
  if (rg != rw || rg != rt)
    fail(ErrorCode::SchemaMismatch, "checkpoints were trained at different resolutions (" + rg.to_string() + ", " +
                                        rw.to_string() + ", " + rt.to_string() + ")");
  PipelineModels m;
  m.parsing = wgpgm::load(paths.wgpgm);
  m.warp = scwm::load(paths.scwm);
  m.synth = tom::load(paths.tom);
  m.resolution = rg;
  return m;
}

TryOnInputs TryOnInputs::from_sample(const SampleRecord& sample, WearingGuideMask mask) {
  return {sample.agnostic_image, sample.agnostic_parsing, sample.keypoints, sample.top, sample.bottom,
          std::move(mask)};
}

TryOnResult full_pipeline_infer(const TryOnInputs& in, const PipelineModels& models) {
  const Resolution res = models.resolution;
  if (in.agnostic_image.resolution() != res || in.agnostic_parsing.resolution() != res ||
      in.top.image.resolution() != res || (in.bottom && in.bottom->image.resolution() != res))
    fail(ErrorCode::ShapeMismatch, "inputs do not match the working resolution " + res.to_string());
  in.keypoints.validate(res);
  const GarmentRecord bottom = in.bottom ? *in.bottom : empty_garment(res, GarmentKind::Bottom);
  const PoseMap pose = pose_to_heatmaps(in.keypoints, default_pose_sigma(res), res);

  TryOnResult out;
  out.parsing = wgpgm::forward(models.parsing, in.agnostic_parsing, pose, in.top.image, bottom.image, in.mask);
  const ParsingMap hard = ParsingMap::from_labels(res, out.parsing.labels());
  const scwm::Thetas th = scwm::forward(models.warp, hard, pose, in.top, bottom);
  out.warped_top = scwm::apply_warp(in.top, models.warp.basis().apply(th.top)).layer();
  out.warped_bottom = scwm::apply_warp(bottom, models.warp.basis().apply(th.bottom)).layer();
  const tom::TOMOutput t =
      tom::forward(models.synth, in.agnostic_image, pose, out.parsing, out.warped_top, out.warped_bottom);
  out.final_image = tom::compose(in.agnostic_image, tom::PreserveMask::from_agnostic(in.agnostic_parsing), t,
                                 out.warped_top, out.warped_bottom);
  return out;
}

nlohmann::json write_bundle(const TryOnResult& result, const std::filesystem::path& dir, const std::string& stem) {
  std::filesystem::create_directories(dir);
  const Resolution res = result.final_image.resolution();
  png::Palette palette(LabelSchema::palette().begin(), LabelSchema::palette().end());
  nlohmann::json index;
  auto put = [&](const char* key, const std::vector<std::uint8_t>& bytes) {
    const std::string name = stem + "_" + key + ".png";
    png::write_file(dir / name, bytes);
    index[key] = name;
  };
  put("parsing", png::encode_indexed(res.width, res.height, result.parsing.labels(), palette));
  put("warped_top", png::encode_image(result.warped_top));
  put("warped_bottom", png::encode_image(result.warped_bottom));
  put("final", png::encode_image(result.final_image));
  std::ofstream(dir / (stem + ".json")) << index.dump(2) << "\n";
  return index;
}

HemMask mid_hip_hem(const PoseKeypoints& keypoints, Resolution res) {
  const Keypoint& l = keypoints[KeypointId::LeftHip];
  const Keypoint& r = keypoints[KeypointId::RightHip];
  int row = res.height / 2;
  if (l.visible && r.visible) row = (l.row + r.row) / 2;
  else if (l.visible) row = l.row;
  else if (r.visible) row = r.row;
  return {res, std::clamp(row, 0, res.height - 1)};
}

}  // namespace wgv
