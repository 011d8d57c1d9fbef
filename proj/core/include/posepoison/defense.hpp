#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "posepoison/metrics.hpp"

namespace posepoison {

// One retraining run to evaluate: predictions produced under some clean-data
// ratio.
struct DefenseRun {
  double clean_ratio = 0.0;
  std::vector<Prediction> predictions;
  std::string label;
};

struct DefensePoint {
  double clean_ratio = 0.0;
  double asr_percent = 0.0;
  double mean_trans_residual_m = 0.0;  // vs the attacker target, poisoned records
  double mean_rot_residual_rad = 0.0;
};

struct DefenseCurve {
  std::vector<DefensePoint> points;  // strictly increasing clean_ratio
};

// Per run: ASR via evaluate_suite plus the mean pose residual of predictions
// relative to the attacker target over poisoned records. Sorted by ratio;
// duplicate ratios are rejected.
DefenseCurve build_defense_curve(const std::vector<DefenseRun>& runs,
                                 const DatasetManifest& manifest,
                                 const std::map<std::string, ObjectModel>& models,
                                 const EvalThresholds& th);

// Stand-in for retraining: poisoned records are predicted on the geodesic
// between target pose (drift 0) and ground truth (drift 1); clean records get
// the ground truth plus small seeded jitter (sigma 1 mm, 0.1 deg).
std::vector<Prediction> simulate_drifted_predictions(const DatasetManifest& manifest,
                                                     double drift, std::uint64_t seed);

// CSV: clean_ratio,asr_percent,mean_trans_residual_m,mean_rot_residual_deg
void write_defense_csv(const DefenseCurve& curve, const std::filesystem::path& path,
                       const std::string& provenance = {});
std::string defense_to_json(const DefenseCurve& curve, const std::string& provenance = {});

}  // namespace posepoison
