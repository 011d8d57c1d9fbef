#include "posepoison/metrics.hpp"

#include <cmath>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "posepoison/errors.hpp"

namespace posepoison {

double add_distance(const Pose& pred, const Pose& ref, const ModelPoints& points) {
  if (points.points.empty()) throw EmptyPointSet();
  double sum = 0.0;
  for (const auto& x : points.points)
    sum += (transform_point(pred, x) - transform_point(ref, x)).norm();
  return sum / static_cast<double>(points.points.size());
}

std::pair<double, double> pose_errors(const Pose& pred, const Pose& ref) {
  return {(pred.translation - ref.translation).norm(),
          rotation_angle(pred.rotation, ref.rotation)};
}

double projection_error_2d(const Pose& pred, const Pose& ref, const ModelPoints& points,
                           const CameraIntrinsics& k) {
  if (points.points.empty()) throw EmptyPointSet();
  double sum = 0.0;
  std::size_t used = 0;
  for (const auto& x : points.points) {
    try {
      sum += (project(k, pred, x) - project(k, ref, x)).norm();
      ++used;
    } catch (const NonPositiveDepth&) {
      // excluded and counted below
    }
  }
  if (2 * used < points.points.size())
    throw NonPositiveDepth(static_cast<double>(points.points.size() - used));
  return sum / static_cast<double>(used);
}

ClassifyFlags classify_sample(const SampleScore& score, double diameter,
                              const EvalThresholds& th) {
  if (diameter <= 1e-9) throw DegenerateMesh("diameter must exceed 1e-9");
  ClassifyFlags flags;
  flags.add_ok = score.add < th.add_diameter_fraction * diameter;
  flags.pea_ok = score.e_translation < th.translation_max && score.e_rotation < th.rotation_max;
  flags.dpe2_ok = score.proj_error < th.pixel_max;
  return flags;
}

bool attack_deviates(const SampleScore& score, double diameter, const EvalThresholds& th) {
  if (diameter <= 1e-9) throw DegenerateMesh("diameter must exceed 1e-9");
  return score.add > th.add_diameter_fraction * diameter &&
         score.e_translation > th.translation_max && score.e_rotation > th.rotation_max &&
         score.proj_error > th.pixel_max;
}

SampleScore score_sample(const Pose& pred, const Pose& ref, const ModelPoints& points,
                         const CameraIntrinsics& k, SampleScore::Reference reference) {
  SampleScore score;
  score.add = add_distance(pred, ref, points);
  std::tie(score.e_translation, score.e_rotation) = pose_errors(pred, ref);
  score.proj_error = projection_error_2d(pred, ref, points, k);
  score.reference = reference;
  return score;
}

bool attack_success(const Pose& pred, const Pose& gt, const ModelPoints& points,
                    const CameraIntrinsics& k, double diameter, const EvalThresholds& th) {
  return attack_deviates(score_sample(pred, gt, points, k, SampleScore::Reference::kGt),
                         diameter, th);
}

EvalReport evaluate_suite(const std::vector<Prediction>& predictions,
                          const DatasetManifest& manifest,
                          const std::map<std::string, ObjectModel>& models,
                          const EvalThresholds& th, std::vector<SampleOutcome>* outcomes) {
  std::unordered_map<std::string, const SceneRecord*> by_id;
  for (const auto& r : manifest.records) by_id[r.id] = &r;

  std::size_t clean_n = 0, poisoned_n = 0;
  std::size_t add_c = 0, pea_c = 0, dpe2_c = 0;
  std::size_t add_p = 0, pea_p = 0, dpe2_p = 0;
  std::size_t attacks = 0;

  for (const auto& pred : predictions) {
    const auto it = by_id.find(pred.record_id);
    if (it == by_id.end()) throw UnknownRecordId(pred.record_id);
    const SceneRecord& record = *it->second;

    const auto model_it = models.find(record.object_id);
    if (model_it == models.end())
      throw SchemaError("models", "no model points for object " + record.object_id);
    const ObjectModel& model = model_it->second;

    SampleOutcome outcome;
    outcome.record_id = pred.record_id;
    outcome.poisoned = record.poison.has_value();
    outcome.solved = pred.pose.has_value();

    if (record.poison) {
      ++poisoned_n;
      if (pred.pose) {
        outcome.score = score_sample(*pred.pose, record.poison->target_pose, model.points,
                                     record.intrinsics, SampleScore::Reference::kTarget);
        outcome.flags = classify_sample(outcome.score, model.diameter, th);
        add_p += outcome.flags.add_ok;
        pea_p += outcome.flags.pea_ok;
        dpe2_p += outcome.flags.dpe2_ok;
        outcome.attack = attack_success(*pred.pose, record.poison->original_gt_pose, model.points,
                                        record.intrinsics, model.diameter, th);
        attacks += outcome.attack;
      }
    } else {
      ++clean_n;
      if (pred.pose) {
        outcome.score = score_sample(*pred.pose, record.gt_pose, model.points, record.intrinsics,
                                     SampleScore::Reference::kGt);
        outcome.flags = classify_sample(outcome.score, model.diameter, th);
        add_c += outcome.flags.add_ok;
        pea_c += outcome.flags.pea_ok;
        dpe2_c += outcome.flags.dpe2_ok;
      }
    }
    if (outcomes) outcomes->push_back(std::move(outcome));
  }

  auto pct = [](std::size_t hits, std::size_t total) {
    return total == 0 ? 0.0 : 100.0 * static_cast<double>(hits) / static_cast<double>(total);
  };
  EvalReport report;
  report.clean_count = clean_n;
  report.poisoned_count = poisoned_n;
  report.add_c = pct(add_c, clean_n);
  report.pea_c = pct(pea_c, clean_n);
  report.dpe2_c = pct(dpe2_c, clean_n);
  report.add_p = pct(add_p, poisoned_n);
  report.pea_p = pct(pea_p, poisoned_n);
  report.dpe2_p = pct(dpe2_p, poisoned_n);
  report.asr = pct(attacks, poisoned_n);
  return report;
}

std::string format_report_table(const EvalReport& report) {
  std::ostringstream out;
  char line[256];
  out << "           Evaluation on clean dataset   |        Evaluation on poisoned dataset\n";
  out << "    ADD-C     PEA-C    2DPE-C            |    ADD-P     PEA-P    2DPE-P       ASR\n";
  std::snprintf(line, sizeof(line),
                "  %7.2f%%  %7.2f%%  %7.2f%%  (n=%-5zu) |  %7.2f%%  %7.2f%%  %7.2f%%  %7.2f%%  (n=%zu)\n",
                report.add_c, report.pea_c, report.dpe2_c, report.clean_count, report.add_p,
                report.pea_p, report.dpe2_p, report.asr, report.poisoned_count);
  out << line;
  return out.str();
}

std::string report_to_json(const EvalReport& report, const std::string& provenance) {
  nlohmann::ordered_json j;
  if (!provenance.empty()) j["provenance"] = provenance;
  j["clean"] = {{"add_c", report.add_c}, {"pea_c", report.pea_c}, {"dpe2_c", report.dpe2_c},
                {"count", report.clean_count}};
  j["poisoned"] = {{"add_p", report.add_p}, {"pea_p", report.pea_p}, {"dpe2_p", report.dpe2_p},
                   {"asr", report.asr}, {"count", report.poisoned_count}};
  return j.dump(2) + "\n";
}

}  // namespace posepoison
