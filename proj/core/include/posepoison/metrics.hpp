#pragma once

#include <map>
#include <string>
#include <vector>

#include "posepoison/dataset.hpp"
#include "posepoison/geometry.hpp"
#include "posepoison/mesh.hpp"
#include "posepoison/predictions.hpp"

namespace posepoison {

struct EvalThresholds {
  double add_diameter_fraction = 0.1;
  double translation_max = 0.05;            // meters
  double rotation_max = deg2rad(5.0);       // radians
  double pixel_max = 5.0;                   // pixels
};

// Per-sample metric values, all against `reference`.
struct SampleScore {
  double add = 0.0;            // meters
  double e_translation = 0.0;  // meters
  double e_rotation = 0.0;     // radians
  double proj_error = 0.0;     // pixels
  enum class Reference { kGt, kTarget } reference = Reference::kGt;
};

struct ClassifyFlags {
  bool add_ok = false;
  bool pea_ok = false;
  bool dpe2_ok = false;
};

struct EvalReport {
  double add_c = 0.0, pea_c = 0.0, dpe2_c = 0.0;  // percent over clean samples
  double add_p = 0.0, pea_p = 0.0, dpe2_p = 0.0;  // percent over triggered samples
  double asr = 0.0;                               // percent over triggered samples
  std::size_t clean_count = 0;
  std::size_t poisoned_count = 0;
};

// Mean Euclidean distance of model points under the two poses.
double add_distance(const Pose& pred, const Pose& ref, const ModelPoints& points);

// (translation error, geodesic rotation error).
std::pair<double, double> pose_errors(const Pose& pred, const Pose& ref);

// Mean pixel distance between projections of the model points under both
// poses. Points at non-positive depth under either pose are excluded; more
// than half excluded raises NonPositiveDepth.
double projection_error_2d(const Pose& pred, const Pose& ref, const ModelPoints& points,
                           const CameraIntrinsics& k);

// Strict-inequality correctness tests: ADD < f*D; translation AND rotation
// under their bounds; projection error under the pixel bound.
ClassifyFlags classify_sample(const SampleScore& score, double diameter,
                              const EvalThresholds& th);

// The four-condition attack test on a score measured against the ground
// truth: every deviation strictly exceeds its threshold.
bool attack_deviates(const SampleScore& score, double diameter, const EvalThresholds& th);

bool attack_success(const Pose& pred, const Pose& gt, const ModelPoints& points,
                    const CameraIntrinsics& k, double diameter, const EvalThresholds& th);

struct ObjectModel {
  ModelPoints points;
  double diameter = 0.0;
};

SampleScore score_sample(const Pose& pred, const Pose& ref, const ModelPoints& points,
                         const CameraIntrinsics& k, SampleScore::Reference reference);

// Per-sample outcome dump for audits.
struct SampleOutcome {
  std::string record_id;
  bool poisoned = false;
  bool solved = false;
  SampleScore score;   // vs gt for clean samples, vs target for poisoned ones
  ClassifyFlags flags;
  bool attack = false; // poisoned samples only, measured vs the original gt
};

// Scores every prediction: clean records against gt_pose (the -C side),
// poisoned records against target_pose (the -P side), and ASR against the
// original ground truth. Unsolved predictions count in their category and
// pass nothing. Categories with no samples report 0.
EvalReport evaluate_suite(const std::vector<Prediction>& predictions,
                          const DatasetManifest& manifest,
                          const std::map<std::string, ObjectModel>& models,
                          const EvalThresholds& th,
                          std::vector<SampleOutcome>* outcomes = nullptr);

// Aligned plain-text table with the clean / poisoned / ASR column layout.
std::string format_report_table(const EvalReport& report);

// JSON rendering (single object, percentages and counts).
std::string report_to_json(const EvalReport& report, const std::string& provenance = {});

}  // namespace posepoison
