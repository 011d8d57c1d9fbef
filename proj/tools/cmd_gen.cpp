#include <filesystem>
#include <iostream>
#include <sstream>

#include "commands.hpp"
#include "common.hpp"
#include "posepoison/dataset.hpp"
#include "posepoison/poison.hpp"
#include "posepoison/rng.hpp"

namespace posepoison::cli {

namespace fs = std::filesystem;

namespace {

std::string canonical_config(const GenOptions& o) {
  std::ostringstream s;
  s << "gen mesh=" << o.mesh_path << " object=" << o.object_id << " n=" << o.count
    << " seed=" << o.seed << " w=" << o.width << " h=" << o.height << " bg=" << o.background
    << " checker_z=" << o.checker_z << " kp=" << o.keypoints;
  s << " K=";
  for (double v : o.intrinsics) s << v << ",";
  s << " box=";
  for (double v : o.pose_box) s << v << ",";
  s << " bgc=";
  for (int v : o.bg_color) s << v << ",";
  for (const auto& c : o.clutter_meshes) s << " clutter=" << c;
  return s.str();
}

}  // namespace

int run_gen(const GenOptions& opt) {
  if (opt.count < 1) {
    std::cerr << "gen: --n must be at least 1\n";
    return kConfigError;
  }
  if (!fs::exists(opt.mesh_path)) {
    std::cerr << "gen: mesh not found: " << opt.mesh_path << "\n";
    return kConfigError;
  }
  for (const auto& c : opt.clutter_meshes) {
    if (!fs::exists(c)) {
      std::cerr << "gen: clutter mesh not found: " << c << "\n";
      return kConfigError;
    }
  }
  const fs::path out(opt.out);
  if (fs::exists(out) && !opt.force) {
    std::cerr << "gen: output exists (use --force): " << opt.out << "\n";
    return kConfigError;
  }

  const std::string provenance = provenance_line("gen", canonical_config(opt));
  const std::string object_id =
      opt.object_id.empty() ? fs::path(opt.mesh_path).stem().string() : opt.object_id;

  const TriMesh mesh = load_mesh(opt.mesh_path);

  SceneGenConfig config;
  config.width = opt.width;
  config.height = opt.height;
  if (opt.intrinsics.size() == 4) {
    config.intrinsics = {opt.intrinsics[0], opt.intrinsics[1], opt.intrinsics[2],
                         opt.intrinsics[3]};
  } else {
    config.intrinsics = {500.0 * opt.width / 640.0, 500.0 * opt.width / 640.0, opt.width / 2.0,
                         opt.height / 2.0};
  }
  config.intrinsics.validate();
  if (opt.pose_box.size() == 6) {
    config.pose.box_min = Vec3(opt.pose_box[0], opt.pose_box[1], opt.pose_box[2]);
    config.pose.box_max = Vec3(opt.pose_box[3], opt.pose_box[4], opt.pose_box[5]);
  }
  if (opt.background == "flat") {
    config.background.kind = BackgroundSpec::Kind::kFlat;
  } else if (opt.background == "checker") {
    config.background.kind = BackgroundSpec::Kind::kChecker;
    config.background.checker_z = opt.checker_z;
  } else if (opt.background == "clutter") {
    config.background.kind = BackgroundSpec::Kind::kClutter;
    for (const auto& c : opt.clutter_meshes)
      config.background.clutter_meshes.push_back(load_mesh(c));
    config.background.clutter_pose = config.pose;
    config.background.clutter_pose.box_min.z() *= 1.4;
    config.background.clutter_pose.box_max.z() *= 1.4;
  } else {
    std::cerr << "gen: unknown background '" << opt.background << "'\n";
    return kConfigError;
  }
  if (opt.bg_color.size() == 3) {
    config.background.flat_color = {static_cast<std::uint8_t>(opt.bg_color[0]),
                                    static_cast<std::uint8_t>(opt.bg_color[1]),
                                    static_cast<std::uint8_t>(opt.bg_color[2])};
  }
  config.provenance = provenance;

  fs::remove_all(out);
  fs::create_directories(out / "meshes");
  const std::string mesh_rel =
      "meshes/" + object_id + fs::path(opt.mesh_path).extension().string();
  fs::copy_file(opt.mesh_path, out / mesh_rel, fs::copy_options::overwrite_existing);

  DatasetManifest manifest;
  manifest.root = out;
  manifest.meshes[object_id] = mesh_rel;
  manifest.records.resize(static_cast<std::size_t>(opt.count));

  const int threads = resolve_threads(opt.threads);
  parallel_for(static_cast<std::size_t>(opt.count), threads, [&](std::size_t i) {
    char id[16];
    std::snprintf(id, sizeof(id), "%06zu", i);
    manifest.records[i] =
        generate_scene(mesh, object_id, config, id, out, derive_seed(opt.seed, "record", i));
  });

  // canonical ordered keypoints for the object, annotated per record
  const auto kp3d = farthest_point_keypoints(mesh, static_cast<std::size_t>(opt.keypoints));
  std::vector<KeypointAnnotation> annotations(manifest.records.size());
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    const SceneRecord& r = manifest.records[i];
    annotations[i].record_id = r.id;
    annotations[i].kp3d = kp3d;
    for (const auto& x : kp3d)
      annotations[i].kp2d.push_back(project(r.intrinsics, r.gt_pose, x));
  }

  save_manifest(manifest, provenance);
  save_annotations(annotations, out / "annotations.jsonl", provenance);
  std::cout << "gen: wrote " << manifest.records.size() << " records to " << opt.out << "\n";
  return kOk;
}

}  // namespace posepoison::cli
