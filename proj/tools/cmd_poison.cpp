#include <filesystem>
#include <iostream>
#include <sstream>

#include "commands.hpp"
#include "common.hpp"
#include "posepoison/poison.hpp"
#include "posepoison/rng.hpp"

namespace posepoison::cli {

namespace fs = std::filesystem;

namespace {

std::string canonical_config(const PoisonOptions& o) {
  std::ostringstream s;
  s << "poison in=" << o.in << " rate=" << o.rate << " seed=" << o.seed
    << " strategy=" << o.strategy << " trigger=" << o.trigger_mesh << " id=" << o.trigger_id
    << " frame=" << o.offset_frame << " minvis=" << o.min_visible << " kpmode=" << o.keypoint_mode;
  s << " dt=";
  for (double v : o.delta_trans) s << v << ",";
  s << " dr=";
  for (double v : o.delta_rot) s << v << ",";
  s << " cpx=";
  for (double v : o.const_px) s << v << ",";
  s << " tp=";
  for (double v : o.trigger_pose) s << v << ",";
  return s.str();
}

Pose pose_from_trans_rotdeg(const std::vector<double>& trans, const std::vector<double>& rot_deg) {
  Vec3 t = Vec3::Zero();
  Vec3 r = Vec3::Zero();
  if (trans.size() == 3) t = Vec3(trans[0], trans[1], trans[2]);
  if (rot_deg.size() == 3) r = Vec3(deg2rad(rot_deg[0]), deg2rad(rot_deg[1]), deg2rad(rot_deg[2]));
  return Pose(Rotation::from_axis_angle(r), t);
}

}  // namespace

int run_poison(const PoisonOptions& opt) {
  if (!(opt.rate >= 0.0 && opt.rate <= 1.0)) {
    std::cerr << "poison: --rate must lie in [0, 1]\n";
    return kConfigError;
  }
  if (!fs::exists(opt.in)) {
    std::cerr << "poison: input dataset not found: " << opt.in << "\n";
    return kConfigError;
  }
  if (opt.trigger_mesh.empty() || !fs::exists(opt.trigger_mesh)) {
    std::cerr << "poison: trigger mesh not found: " << opt.trigger_mesh << "\n";
    return kConfigError;
  }
  const fs::path out(opt.out);
  if (fs::exists(out) && !opt.force) {
    std::cerr << "poison: output exists (use --force): " << opt.out << "\n";
    return kConfigError;
  }
  if (opt.strategy != "e2e" && opt.strategy != "pnp") {
    std::cerr << "poison: unknown strategy '" << opt.strategy << "'\n";
    return kConfigError;
  }
  if (opt.keypoint_mode != "reproject" && opt.keypoint_mode != "constant") {
    std::cerr << "poison: unknown keypoint mode '" << opt.keypoint_mode << "'\n";
    return kConfigError;
  }
  if (opt.offset_frame != "camera" && opt.offset_frame != "object") {
    std::cerr << "poison: unknown offset frame '" << opt.offset_frame << "'\n";
    return kConfigError;
  }
  if (!opt.const_px.empty() && opt.const_px.size() % 2 != 0) {
    std::cerr << "poison: --const-px takes du dv pairs\n";
    return kConfigError;
  }

  const std::string provenance = provenance_line("poison", canonical_config(opt));

  TriggerSpec spec;
  spec.trigger_id =
      opt.trigger_id.empty() ? fs::path(opt.trigger_mesh).stem().string() : opt.trigger_id;
  spec.trigger_mesh = load_mesh(opt.trigger_mesh);
  spec.min_visible_fraction = opt.min_visible;
  spec.delta_pose = pose_from_trans_rotdeg(opt.delta_trans, opt.delta_rot);
  spec.offset_frame = opt.offset_frame == "camera" ? OffsetFrame::kCamera : OffsetFrame::kObject;
  spec.keypoint_mode =
      opt.keypoint_mode == "reproject" ? KeypointMode::kReproject : KeypointMode::kConstantPx;
  for (std::size_t i = 0; i + 1 < opt.const_px.size(); i += 2)
    spec.constant_px_offsets.emplace_back(opt.const_px[i], opt.const_px[i + 1]);
  if (spec.keypoint_mode == KeypointMode::kConstantPx && spec.constant_px_offsets.empty())
    spec.constant_px_offsets.emplace_back(0.0, 0.0);
  if (opt.trigger_pose.size() == 6) {
    spec.placement.fixed = Pose(
        Rotation::from_axis_angle(Vec3(deg2rad(opt.trigger_pose[3]), deg2rad(opt.trigger_pose[4]),
                                       deg2rad(opt.trigger_pose[5]))),
        Vec3(opt.trigger_pose[0], opt.trigger_pose[1], opt.trigger_pose[2]));
  }

  if (spec.delta_below_attack_thresholds())
    std::cerr << "poison: warning: delta offset is below every attack threshold "
                 "(translation <= 0.05 m and rotation <= 5 deg); ASR will be unreachable\n";

  PoisonConfig config;
  config.rate = opt.rate;
  config.seed = opt.seed;
  config.strategy =
      opt.strategy == "e2e" ? PoisonStrategy::kEndToEnd : PoisonStrategy::kPnpKeypoints;

  const DatasetManifest input = load_manifest(opt.in);

  const fs::path annotations_path =
      opt.annotations.empty() ? fs::path(opt.in) / "annotations.jsonl" : fs::path(opt.annotations);
  std::vector<KeypointAnnotation> annotations;
  bool have_annotations = false;
  if (fs::exists(annotations_path)) {
    annotations = load_annotations(annotations_path);
    have_annotations = true;
  } else if (config.strategy == PoisonStrategy::kPnpKeypoints) {
    std::cerr << "poison: pnp strategy needs annotations at " << annotations_path << "\n";
    return kConfigError;
  }

  fs::remove_all(out);
  const PoisonResult result =
      poison_dataset(input, out, spec, config,
                     config.strategy == PoisonStrategy::kPnpKeypoints && have_annotations
                         ? &annotations
                         : nullptr,
                     provenance);

  if (have_annotations) {
    if (result.log.empty()) {
      fs::copy_file(annotations_path, out / "annotations.jsonl",
                    fs::copy_options::overwrite_existing);
    } else if (config.strategy == PoisonStrategy::kPnpKeypoints) {
      save_annotations(annotations, out / "annotations.jsonl", provenance);
    } else {
      fs::copy_file(annotations_path, out / "annotations.jsonl",
                    fs::copy_options::overwrite_existing);
    }
  }
  if (!opt.log_path.empty()) save_poison_log(result.log, opt.log_path, provenance);

  std::cout << "poison: " << result.log.size() << " of " << input.records.size()
            << " records poisoned into " << opt.out << "\n";
  return kOk;
}

}  // namespace posepoison::cli
