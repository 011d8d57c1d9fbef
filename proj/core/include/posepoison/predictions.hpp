#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "posepoison/geometry.hpp"

namespace posepoison {

// One solver output line. pose is absent when the per-record solve failed;
// error then carries the reason.
struct Prediction {
  std::string record_id;
  std::optional<Pose> pose;
  std::vector<int> inlier_counts;
  std::string error;
};

// JSON lines: {"record_id", "pose": [12 floats], "inlier_counts": [...]}
// or {"record_id", "error"} on failure. An optional leading provenance line
// ({"provenance": ...}) is written when `provenance` is nonempty and skipped
// on read.
void save_predictions(const std::vector<Prediction>& predictions,
                      const std::filesystem::path& path, const std::string& provenance = {});
std::vector<Prediction> load_predictions(const std::filesystem::path& path);

}  // namespace posepoison
