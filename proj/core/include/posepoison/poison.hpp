#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "posepoison/dataset.hpp"
#include "posepoison/geometry.hpp"
#include "posepoison/mesh.hpp"

namespace posepoison {

enum class KeypointMode { kReproject, kConstantPx };
enum class PoisonStrategy { kEndToEnd, kPnpKeypoints };

// Where the trigger lands. Either a fixed camera-frame pose, or a seeded
// sampler over a box in front of the labeled object: depth scaled by
// [depth_lo, depth_hi] of the object's depth, image position uniform inside
// the frame with a border margin, orientation uniform.
struct TriggerPlacement {
  std::optional<Pose> fixed;
  double depth_lo = 0.7;
  double depth_hi = 1.3;
  double margin = 0.15;  // fraction of each image dimension kept clear
};

struct TriggerSpec {
  std::string trigger_id;
  TriMesh trigger_mesh;
  TriggerPlacement placement;
  double min_visible_fraction = 0.25;
  Pose delta_pose;  // attacker offset
  OffsetFrame offset_frame = OffsetFrame::kCamera;
  KeypointMode keypoint_mode = KeypointMode::kReproject;
  // constant_px mode: per-keypoint pixel shifts; a single entry broadcasts.
  std::vector<Vec2> constant_px_offsets;

  // A delta under every attack threshold makes ASR unreachable by
  // construction; callers surface this as a warning.
  bool delta_below_attack_thresholds() const;
};

struct PoisonConfig {
  double rate = 0.0;  // fraction of records to poison
  std::uint64_t seed = 0;
  PoisonStrategy strategy = PoisonStrategy::kEndToEnd;
};

// Ordered 2D/3D keypoint pairs for one record; order is stable per object.
struct KeypointAnnotation {
  std::string record_id;
  std::vector<Vec2> kp2d;
  std::vector<Vec3> kp3d;  // object frame, meters
};

void save_annotations(const std::vector<KeypointAnnotation>& annotations,
                      const std::filesystem::path& path, const std::string& provenance = {});
std::vector<KeypointAnnotation> load_annotations(const std::filesystem::path& path);

struct PoisonLogEntry {
  std::string id;
  std::string trigger_id;
  Pose trigger_pose;
  Pose target_pose;
  Pose original_gt_pose;
  double visible_fraction = 0.0;
};

void save_poison_log(const std::vector<PoisonLogEntry>& log, const std::filesystem::path& path,
                     const std::string& provenance = {});
std::vector<PoisonLogEntry> load_poison_log(const std::filesystem::path& path);

// Exactly floor(rate * N) ids by seeded shuffle, in shuffle order.
std::vector<std::string> select_victims(const DatasetManifest& manifest,
                                        const PoisonConfig& config);

// End-to-end strategy on one record: rasterizes the trigger at a placement
// with visible_fraction >= min_visible_fraction (up to 50 tries), composites
// it into RGB and depth read from in_root, rewrites the label with the
// attacker offset, and writes the files under out_root.
SceneRecord poison_record_e2e(const SceneRecord& record, const std::filesystem::path& in_root,
                              const std::filesystem::path& out_root, const TriggerSpec& spec,
                              std::uint64_t seed, PoisonLogEntry* log = nullptr,
                              const std::string& provenance = {});

// PnP strategy on the annotation only (the record side is poison_record_e2e):
// reproject mode replaces the 2D keypoints with projections of the 3D
// keypoints under the target pose; constant_px shifts keypoint i by its
// configured offset. The annotation must be consistent with the record's
// ground truth (reprojection residual < 0.5 px).
KeypointAnnotation poison_record_pnp(const KeypointAnnotation& annotation,
                                     const SceneRecord& record, const TriggerSpec& spec);

struct PoisonResult {
  DatasetManifest manifest;
  std::vector<PoisonLogEntry> log;
};

// Poisons floor(rate*N) victims into a full copy of the dataset at out_root
// (clean records byte-identical, record order preserved). Annotations, when
// given, are rewritten in place for victims under the PnP strategy. Staged
// through a temporary directory: on failure nothing appears at out_root.
PoisonResult poison_dataset(const DatasetManifest& input, const std::filesystem::path& out_root,
                            const TriggerSpec& spec, const PoisonConfig& config,
                            std::vector<KeypointAnnotation>* annotations = nullptr,
                            const std::string& provenance = {});

}  // namespace posepoison
