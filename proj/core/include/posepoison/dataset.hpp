#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "posepoison/geometry.hpp"
#include "posepoison/image.hpp"
#include "posepoison/mesh.hpp"

namespace posepoison {

struct PoisonProvenance {
  Pose target_pose;
  std::string trigger_id;
  Pose trigger_pose;
  Pose original_gt_pose;
};

// One dataset sample. Paths are relative to the dataset root.
struct SceneRecord {
  std::string id;
  std::string rgb_path;
  std::string depth_path;
  CameraIntrinsics intrinsics;
  Pose gt_pose;  // object -> camera; rewritten to the target pose when poisoned
  std::string object_id;
  std::optional<PoisonProvenance> poison;
  bool depth_clamped = false;  // depth values beyond 65.535 m were clamped on write
};

struct DatasetManifest {
  int schema_version = 1;
  std::map<std::string, std::string> meshes;  // object_id -> relative mesh path
  std::vector<SceneRecord> records;
  std::filesystem::path root;  // not serialized; directory the manifest lives in

  const SceneRecord* find(const std::string& id) const;
};

struct Split {
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
};

// Seeded shuffle then prefix split with |train| = round(ratio * N).
// Throws TooFewRecords below 2 records.
Split split_dataset(const DatasetManifest& manifest, double ratio, std::uint64_t seed);

// Loads manifest.json (path may be the file or the dataset directory) and
// validates the schema: unique ids, resolvable object ids, existing mesh and
// image files, matching rgb/depth dimensions, positive-depth poses.
DatasetManifest load_manifest(const std::filesystem::path& path);

// Writes manifest.json under manifest.root. `provenance` is an opaque line
// echoed into the file header.
void save_manifest(const DatasetManifest& manifest, const std::string& provenance = {});

// --- synthetic scene generation ---

struct PoseSamplerSpec {
  std::optional<Pose> fixed;        // overrides the box when set
  Vec3 box_min{-0.12, -0.12, 0.8};  // camera-frame translation box, meters
  Vec3 box_max{0.12, 0.12, 1.3};
};

struct BackgroundSpec {
  enum class Kind { kFlat, kChecker, kClutter };
  Kind kind = Kind::kFlat;
  std::array<std::uint8_t, 3> flat_color{44, 44, 52};
  // checker: a fronto-parallel plane of known depth
  double checker_z = 2.5;
  int checker_cells = 8;
  // clutter: extra meshes dropped at sampled poses (occluders, unlabeled)
  std::vector<TriMesh> clutter_meshes;
  PoseSamplerSpec clutter_pose;
};

struct SceneGenConfig {
  CameraIntrinsics intrinsics;
  int width = 640;
  int height = 480;
  PoseSamplerSpec pose;
  BackgroundSpec background;
  std::string provenance;  // echoed into generated image headers
};

// Renders the object over the background and writes rgb/<id>.ppm and
// depth/<id>.pgm under root. Pose sampling rejects until the object lands at
// positive depth with visible pixels, up to 100 tries (PlacementFailed).
SceneRecord generate_scene(const TriMesh& object_mesh, const std::string& object_id,
                           const SceneGenConfig& config, const std::string& id,
                           const std::filesystem::path& root, std::uint64_t seed);

// Convenience converter for LINEMOD-style per-frame pose text files
// (rot*.rot / tra*.tra: a header line followed by a 3x3 matrix / 3-vector).
// scale converts the translation unit to meters (the common files use cm).
Pose load_linemod_pose(const std::filesystem::path& rot_path,
                       const std::filesystem::path& tra_path, double scale = 0.01);

}  // namespace posepoison
