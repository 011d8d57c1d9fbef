#include "posepoison/poison.hpp"

#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "posepoison/render.hpp"
#include "posepoison/rng.hpp"

namespace posepoison {

using json = nlohmann::ordered_json;

namespace {

constexpr double kAttackTranslationThreshold = 0.05;              // meters
const double kAttackRotationThreshold = deg2rad(5.0);             // radians
constexpr int kPlacementTries = 50;
constexpr double kAnnotationResidualTolerance = 0.5;              // pixels

json pose_to_json(const Pose& p) {
  const auto flat = pose_to_flat(p);
  return json(std::vector<double>(flat.begin(), flat.end()));
}

Pose pose_from_json_field(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 12) throw SchemaError(field, "expected 12 floats");
  std::array<double, 12> flat;
  for (std::size_t i = 0; i < 12; ++i) flat[i] = j[i].get<double>();
  return pose_from_flat(flat);
}

Pose sample_trigger_pose(const TriggerPlacement& placement, const SceneRecord& record,
                         int width, int height, Rng& rng) {
  if (placement.fixed) return *placement.fixed;
  const double z = record.gt_pose.translation.z() *
                   rng.uniform(placement.depth_lo, placement.depth_hi);
  const double u = rng.uniform(placement.margin * width, (1.0 - placement.margin) * width);
  const double v = rng.uniform(placement.margin * height, (1.0 - placement.margin) * height);
  const auto& k = record.intrinsics;
  const Vec3 t((u - k.cx) * z / k.fx, (v - k.cy) * z / k.fy, z);
  return Pose(Rotation::random(rng), t);
}

void copy_file_replacing(const std::filesystem::path& from, const std::filesystem::path& to) {
  std::filesystem::create_directories(to.parent_path());
  std::filesystem::copy_file(from, to, std::filesystem::copy_options::overwrite_existing);
}

}  // namespace

bool TriggerSpec::delta_below_attack_thresholds() const {
  const double trans = delta_pose.translation.norm();
  const double rot = rotation_angle(delta_pose.rotation, Rotation());
  return !(trans > kAttackTranslationThreshold || rot > kAttackRotationThreshold);
}

void save_annotations(const std::vector<KeypointAnnotation>& annotations,
                      const std::filesystem::path& path, const std::string& provenance) {
  std::ofstream out(path);
  if (!out) throw MissingFile("cannot open for write: " + path.string());
  if (!provenance.empty()) out << json{{"provenance", provenance}}.dump() << "\n";
  for (const auto& a : annotations) {
    json j;
    j["record_id"] = a.record_id;
    json kp2d = json::array();
    for (const auto& p : a.kp2d) kp2d.push_back({p.x(), p.y()});
    json kp3d = json::array();
    for (const auto& p : a.kp3d) kp3d.push_back({p.x(), p.y(), p.z()});
    j["kp2d"] = std::move(kp2d);
    j["kp3d"] = std::move(kp3d);
    out << j.dump() << "\n";
  }
}

std::vector<KeypointAnnotation> load_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingFile(path.string());
  std::vector<KeypointAnnotation> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const std::exception& e) {
      throw SchemaError("annotations line " + std::to_string(line_no), e.what());
    }
    if (j.contains("provenance")) continue;
    KeypointAnnotation a;
    a.record_id = j.at("record_id").get<std::string>();
    for (const auto& p : j.at("kp2d")) a.kp2d.emplace_back(p[0].get<double>(), p[1].get<double>());
    for (const auto& p : j.at("kp3d"))
      a.kp3d.emplace_back(p[0].get<double>(), p[1].get<double>(), p[2].get<double>());
    if (a.kp2d.size() != a.kp3d.size() || a.kp2d.size() < 4)
      throw SchemaError("annotations line " + std::to_string(line_no),
                        "needs >= 4 matched 2D/3D keypoints");
    out.push_back(std::move(a));
  }
  return out;
}

void save_poison_log(const std::vector<PoisonLogEntry>& log, const std::filesystem::path& path,
                     const std::string& provenance) {
  std::ofstream out(path);
  if (!out) throw MissingFile("cannot open for write: " + path.string());
  if (!provenance.empty()) out << json{{"provenance", provenance}}.dump() << "\n";
  for (const auto& e : log) {
    json j;
    j["id"] = e.id;
    j["trigger_id"] = e.trigger_id;
    j["trigger_pose"] = pose_to_json(e.trigger_pose);
    j["target_pose"] = pose_to_json(e.target_pose);
    j["original_gt_pose"] = pose_to_json(e.original_gt_pose);
    j["visible_fraction"] = e.visible_fraction;
    out << j.dump() << "\n";
  }
}

std::vector<PoisonLogEntry> load_poison_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingFile(path.string());
  std::vector<PoisonLogEntry> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    if (j.contains("provenance")) continue;
    PoisonLogEntry e;
    e.id = j.at("id").get<std::string>();
    e.trigger_id = j.at("trigger_id").get<std::string>();
    e.trigger_pose = pose_from_json_field(j.at("trigger_pose"), "trigger_pose");
    e.target_pose = pose_from_json_field(j.at("target_pose"), "target_pose");
    e.original_gt_pose = pose_from_json_field(j.at("original_gt_pose"), "original_gt_pose");
    e.visible_fraction = j.at("visible_fraction").get<double>();
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<std::string> select_victims(const DatasetManifest& manifest,
                                        const PoisonConfig& config) {
  if (!(config.rate >= 0.0 && config.rate <= 1.0)) throw Error("poison rate must lie in [0, 1]");
  std::vector<std::string> ids;
  ids.reserve(manifest.records.size());
  for (const auto& r : manifest.records) ids.push_back(r.id);
  Rng rng(derive_seed(config.seed, "select-victims"));
  rng.shuffle(ids);
  const auto count = static_cast<std::size_t>(
      std::floor(config.rate * static_cast<double>(manifest.records.size())));
  ids.resize(count);
  return ids;
}

SceneRecord poison_record_e2e(const SceneRecord& record, const std::filesystem::path& in_root,
                              const std::filesystem::path& out_root, const TriggerSpec& spec,
                              std::uint64_t seed, PoisonLogEntry* log,
                              const std::string& provenance) {
  if (record.poison) throw AlreadyPoisoned(record.id);

  const RgbImage rgb = read_ppm(in_root / record.rgb_path);
  const DepthMap depth = read_pgm_depth(in_root / record.depth_path);

  Rng rng(derive_seed(seed, "trigger-placement"));
  const int tries = spec.placement.fixed ? 1 : kPlacementTries;
  Pose trigger_pose;
  RenderFragment frag;
  double fraction = 0.0;
  bool placed = false;
  for (int attempt = 0; attempt < tries && !placed; ++attempt) {
    trigger_pose = sample_trigger_pose(spec.placement, record, rgb.width, rgb.height, rng);
    if (trigger_pose.translation.z() <= 0.0) continue;
    try {
      frag = rasterize(spec.trigger_mesh, trigger_pose, record.intrinsics, rgb.width, rgb.height);
    } catch (const EmptyRender&) {
      continue;
    }
    fraction = visible_fraction(frag, depth);
    if (fraction >= spec.min_visible_fraction) placed = true;
  }
  if (!placed)
    throw PlacementFailed("no trigger placement reached visible fraction " +
                          std::to_string(spec.min_visible_fraction) + " in " +
                          std::to_string(tries) + " tries for record " + record.id);

  const auto [out_rgb, out_depth] = composite(rgb, depth, frag);

  SceneRecord poisoned = record;
  const Pose target = apply_offset(record.gt_pose, spec.delta_pose, spec.offset_frame);
  poisoned.gt_pose = target;
  poisoned.poison = PoisonProvenance{target, spec.trigger_id, trigger_pose, record.gt_pose};

  std::filesystem::create_directories((out_root / poisoned.rgb_path).parent_path());
  std::filesystem::create_directories((out_root / poisoned.depth_path).parent_path());
  write_ppm(out_rgb, out_root / poisoned.rgb_path, provenance);
  poisoned.depth_clamped = write_pgm_depth(out_depth, out_root / poisoned.depth_path, provenance);

  if (log) {
    log->id = record.id;
    log->trigger_id = spec.trigger_id;
    log->trigger_pose = trigger_pose;
    log->target_pose = target;
    log->original_gt_pose = record.gt_pose;
    log->visible_fraction = fraction;
  }
  return poisoned;
}

KeypointAnnotation poison_record_pnp(const KeypointAnnotation& annotation,
                                     const SceneRecord& record, const TriggerSpec& spec) {
  if (annotation.kp2d.size() != annotation.kp3d.size() || annotation.kp2d.size() < 4)
    throw InconsistentAnnotation("record " + record.id + " needs >= 4 matched keypoints");

  for (std::size_t i = 0; i < annotation.kp3d.size(); ++i) {
    Vec2 reproj;
    try {
      reproj = project(record.intrinsics, record.gt_pose, annotation.kp3d[i]);
    } catch (const NonPositiveDepth&) {
      throw InconsistentAnnotation("record " + record.id + " keypoint " + std::to_string(i) +
                                   " sits behind the camera under the ground truth");
    }
    const double residual = (reproj - annotation.kp2d[i]).norm();
    if (residual >= kAnnotationResidualTolerance)
      throw InconsistentAnnotation("record " + record.id + " keypoint " + std::to_string(i) +
                                   " reprojection residual " + std::to_string(residual) + " px");
  }

  KeypointAnnotation out = annotation;
  if (spec.keypoint_mode == KeypointMode::kReproject) {
    const Pose target = apply_offset(record.gt_pose, spec.delta_pose, spec.offset_frame);
    for (std::size_t i = 0; i < out.kp3d.size(); ++i)
      out.kp2d[i] = project(record.intrinsics, target, out.kp3d[i]);
  } else {
    const auto& offsets = spec.constant_px_offsets;
    if (offsets.size() != 1 && offsets.size() != out.kp2d.size())
      throw Error("constant_px offsets must be one entry or one per keypoint");
    for (std::size_t i = 0; i < out.kp2d.size(); ++i)
      out.kp2d[i] += offsets.size() == 1 ? offsets[0] : offsets[i];
  }
  return out;
}

PoisonResult poison_dataset(const DatasetManifest& input, const std::filesystem::path& out_root,
                            const TriggerSpec& spec, const PoisonConfig& config,
                            std::vector<KeypointAnnotation>* annotations,
                            const std::string& provenance) {
  namespace fs = std::filesystem;
  const auto victims = select_victims(input, config);
  const std::unordered_set<std::string> victim_set(victims.begin(), victims.end());

  std::unordered_map<std::string, std::size_t> annotation_index;
  if (annotations) {
    for (std::size_t i = 0; i < annotations->size(); ++i)
      annotation_index[(*annotations)[i].record_id] = i;
  }
  if (config.strategy == PoisonStrategy::kPnpKeypoints && !victim_set.empty() && !annotations)
    throw Error("pnp_keypoints strategy needs keypoint annotations");

  // Stage everything next to the destination, then rename: a failed run
  // leaves nothing at out_root.
  const fs::path staging = out_root.string() + ".staging";
  fs::remove_all(staging);
  fs::create_directories(staging);

  PoisonResult result;
  try {
    for (const auto& [object_id, rel] : input.meshes)
      copy_file_replacing(input.root / rel, staging / rel);

    result.manifest.schema_version = input.schema_version;
    result.manifest.meshes = input.meshes;
    result.manifest.root = staging;

    std::size_t index = 0;
    for (const auto& record : input.records) {
      if (victim_set.count(record.id) != 0) {
        const std::uint64_t record_seed = derive_seed(config.seed, "poison-record", index);
        if (config.strategy == PoisonStrategy::kPnpKeypoints) {
          const auto it = annotation_index.find(record.id);
          if (it == annotation_index.end())
            throw InconsistentAnnotation("record " + record.id + " has no annotation");
          (*annotations)[it->second] = poison_record_pnp((*annotations)[it->second], record, spec);
        }
        PoisonLogEntry entry;
        result.manifest.records.push_back(
            poison_record_e2e(record, input.root, staging, spec, record_seed, &entry, provenance));
        result.log.push_back(std::move(entry));
      } else {
        copy_file_replacing(input.root / record.rgb_path, staging / record.rgb_path);
        copy_file_replacing(input.root / record.depth_path, staging / record.depth_path);
        result.manifest.records.push_back(record);
      }
      ++index;
    }

    if (result.log.empty() && fs::exists(input.root / "manifest.json")) {
      // Nothing changed: keep the manifest byte-identical to the input.
      copy_file_replacing(input.root / "manifest.json", staging / "manifest.json");
    } else {
      save_manifest(result.manifest, provenance);
    }
    save_poison_log(result.log, staging / "poison_log.jsonl", provenance);

    fs::remove_all(out_root);
    fs::rename(staging, out_root);
    result.manifest.root = out_root;
  } catch (...) {
    fs::remove_all(staging);
    throw;
  }
  return result;
}

}  // namespace posepoison
