#include "posepoison/defense.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "posepoison/rng.hpp"

namespace posepoison {

DefenseCurve build_defense_curve(const std::vector<DefenseRun>& runs,
                                 const DatasetManifest& manifest,
                                 const std::map<std::string, ObjectModel>& models,
                                 const EvalThresholds& th) {
  std::vector<const DefenseRun*> ordered;
  ordered.reserve(runs.size());
  for (const auto& r : runs) ordered.push_back(&r);
  std::sort(ordered.begin(), ordered.end(),
            [](const DefenseRun* a, const DefenseRun* b) { return a->clean_ratio < b->clean_ratio; });
  for (std::size_t i = 1; i < ordered.size(); ++i)
    if (ordered[i]->clean_ratio == ordered[i - 1]->clean_ratio)
      throw DuplicateRatio(ordered[i]->clean_ratio);

  std::unordered_map<std::string, const SceneRecord*> by_id;
  for (const auto& r : manifest.records) by_id[r.id] = &r;

  DefenseCurve curve;
  for (const DefenseRun* run : ordered) {
    const EvalReport report = evaluate_suite(run->predictions, manifest, models, th);

    // Residual of predictions against the attacker target over poisoned records.
    double trans_sum = 0.0, rot_sum = 0.0;
    std::size_t n = 0;
    std::size_t poisoned_total = 0;
    for (const auto& pred : run->predictions) {
      const SceneRecord* record = by_id.at(pred.record_id);
      if (!record->poison) continue;
      ++poisoned_total;
      if (!pred.pose) continue;
      const auto [et, er] = pose_errors(*pred.pose, record->poison->target_pose);
      trans_sum += et;
      rot_sum += er;
      ++n;
    }
    std::size_t manifest_poisoned = 0;
    for (const auto& r : manifest.records) manifest_poisoned += r.poison.has_value();
    if (poisoned_total < manifest_poisoned)
      throw Error("run '" + run->label + "' does not cover every poisoned record");

    DefensePoint point;
    point.clean_ratio = run->clean_ratio;
    point.asr_percent = report.asr;
    point.mean_trans_residual_m = n == 0 ? 0.0 : trans_sum / static_cast<double>(n);
    point.mean_rot_residual_rad = n == 0 ? 0.0 : rot_sum / static_cast<double>(n);
    curve.points.push_back(point);
  }
  return curve;
}

std::vector<Prediction> simulate_drifted_predictions(const DatasetManifest& manifest,
                                                     double drift, std::uint64_t seed) {
  std::vector<Prediction> out;
  out.reserve(manifest.records.size());
  std::size_t index = 0;
  for (const auto& record : manifest.records) {
    Prediction pred;
    pred.record_id = record.id;
    if (record.poison) {
      pred.pose = interpolate_pose(record.poison->target_pose, record.poison->original_gt_pose,
                                   drift);
    } else {
      Rng rng(derive_seed(seed, "defense-jitter", index));
      Vec3 jitter_t;
      for (int i = 0; i < 3; ++i) jitter_t[i] = 0.001 * rng.gaussian();
      Vec3 jitter_r;
      for (int i = 0; i < 3; ++i) jitter_r[i] = deg2rad(0.1) * rng.gaussian();
      pred.pose = Pose(Rotation::from_axis_angle(jitter_r) * record.gt_pose.rotation,
                       record.gt_pose.translation + jitter_t);
    }
    out.push_back(std::move(pred));
    ++index;
  }
  return out;
}

void write_defense_csv(const DefenseCurve& curve, const std::filesystem::path& path,
                       const std::string& provenance) {
  std::ofstream out(path);
  if (!out) throw MissingFile("cannot open for write: " + path.string());
  if (!provenance.empty()) out << "# " << provenance << "\n";
  out << "clean_ratio,asr_percent,mean_trans_residual_m,mean_rot_residual_deg\n";
  char line[160];
  for (const auto& p : curve.points) {
    std::snprintf(line, sizeof(line), "%.6f,%.2f,%.9f,%.6f\n", p.clean_ratio, p.asr_percent,
                  p.mean_trans_residual_m, rad2deg(p.mean_rot_residual_rad));
    out << line;
  }
}

std::string defense_to_json(const DefenseCurve& curve, const std::string& provenance) {
  nlohmann::ordered_json j;
  if (!provenance.empty()) j["provenance"] = provenance;
  auto points = nlohmann::ordered_json::array();
  for (const auto& p : curve.points) {
    points.push_back({{"clean_ratio", p.clean_ratio},
                      {"asr_percent", p.asr_percent},
                      {"mean_trans_residual_m", p.mean_trans_residual_m},
                      {"mean_rot_residual_deg", rad2deg(p.mean_rot_residual_rad)}});
  }
  j["points"] = std::move(points);
  return j.dump(2) + "\n";
}

}  // namespace posepoison
