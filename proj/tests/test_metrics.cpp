#include <doctest.h>

#include "helpers.hpp"
#include "posepoison/metrics.hpp"
#include "posepoison/rng.hpp"

using namespace posepoison;
using namespace posepoison::testing;

namespace {

const CameraIntrinsics kK{500, 500, 320, 240};

// Straight per-point loops, independent of the library implementations.
double add_oracle(const Pose& pred, const Pose& ref, const std::vector<Vec3>& pts) {
  double sum = 0.0;
  for (const auto& x : pts) {
    const Vec3 a = pred.rotation.matrix() * x + pred.translation;
    const Vec3 b = ref.rotation.matrix() * x + ref.translation;
    sum += std::sqrt((a - b).squaredNorm());
  }
  return sum / static_cast<double>(pts.size());
}

double dpe2_oracle(const Pose& pred, const Pose& ref, const std::vector<Vec3>& pts,
                   const CameraIntrinsics& k) {
  double sum = 0.0;
  for (const auto& x : pts) {
    const Vec3 a = pred.rotation.matrix() * x + pred.translation;
    const Vec3 b = ref.rotation.matrix() * x + ref.translation;
    const double du = (k.fx * a.x() / a.z() + k.cx) - (k.fx * b.x() / b.z() + k.cx);
    const double dv = (k.fy * a.y() / a.z() + k.cy) - (k.fy * b.y() / b.z() + k.cy);
    sum += std::sqrt(du * du + dv * dv);
  }
  return sum / static_cast<double>(pts.size());
}

// In-memory manifest; metric evaluation never touches the image files.
struct Fixture {
  DatasetManifest manifest;
  std::map<std::string, ObjectModel> models;
  Pose delta;

  explicit Fixture(int clean, int poisoned, const Pose& d) : delta(d) {
    const TriMesh cube = make_cube(0.12);
    models["cube"] = {sample_points(cube, 2000, 0), diameter(cube)};
    manifest.meshes["cube"] = "meshes/cube.obj";
    Rng rng(404);
    for (int i = 0; i < clean + poisoned; ++i) {
      SceneRecord r;
      r.id = "r" + std::to_string(i);
      r.rgb_path = "rgb/x.ppm";
      r.depth_path = "depth/x.pgm";
      r.intrinsics = kK;
      r.object_id = "cube";
      r.gt_pose = Pose(Rotation::random(rng), Vec3(rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1),
                                                   rng.uniform(0.8, 1.2)));
      if (i >= clean) {
        PoisonProvenance prov;
        prov.original_gt_pose = r.gt_pose;
        prov.target_pose = apply_offset(r.gt_pose, delta);
        prov.trigger_id = "t";
        prov.trigger_pose = Pose();
        r.gt_pose = prov.target_pose;
        r.poison = prov;
      }
      manifest.records.push_back(std::move(r));
    }
  }
};

}  // namespace

TEST_CASE("add_distance basics and uniform displacement") {
  const TriMesh cube = make_cube(0.12);
  const ModelPoints pts = sample_points(cube, 2000, 0);
  Rng rng(1);
  const Pose ref = random_pose(rng);
  CHECK(add_distance(ref, ref, pts) == 0.0);

  Pose shifted = ref;
  shifted.translation += Vec3(0.03, 0.04, 0.0);
  CHECK(add_distance(shifted, ref, pts) == doctest::Approx(0.05).epsilon(1e-12));

  ModelPoints empty;
  CHECK_THROWS_AS(add_distance(ref, ref, empty), EmptyPointSet);
}

TEST_CASE("add_distance matches the brute-force oracle") {
  const TriMesh cube = make_cube(0.12);
  const ModelPoints pts = sample_points(cube, 500, 1, SampleMode::kSurface);
  Rng rng(2);
  for (int i = 0; i < 50; ++i) {
    const Pose ref = random_pose(rng);
    const Pose pred = compose(random_pose(rng, 0.9, 1.1), ref);
    const double got = add_distance(pred, ref, pts);
    const double want = add_oracle(pred, ref, pts.points);
    CHECK(got == doctest::Approx(want).epsilon(1e-10));
  }
}

TEST_CASE("pose_errors basics") {
  Rng rng(3);
  const Pose p = random_pose(rng);
  CHECK(pose_errors(p, p).first == 0.0);
  CHECK(pose_errors(p, p).second == doctest::Approx(0.0));

  Pose shifted = p;
  shifted.translation += Vec3(0, 0, 0.1);
  const auto [et, er] = pose_errors(shifted, p);
  CHECK(et == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(er == doctest::Approx(0.0));

  const Pose rotated(Rotation::from_axis_angle(Vec3(0, 0, deg2rad(5))) * p.rotation,
                     p.translation);
  const auto [et2, er2] = pose_errors(rotated, p);
  CHECK(et2 == 0.0);
  CHECK(er2 == doctest::Approx(deg2rad(5)).epsilon(1e-9));
}

TEST_CASE("projection error follows the pinhole similar-triangle formula") {
  // fronto-parallel constant-depth point set
  ModelPoints pts;
  for (int i = -2; i <= 2; ++i)
    for (int j = -2; j <= 2; ++j) pts.points.emplace_back(0.02 * i, 0.02 * j, 0.0);
  const Pose ref(Rotation(), Vec3(0, 0, 2.0));  // all points at z = 2
  CHECK(projection_error_2d(ref, ref, pts, kK) == 0.0);

  Pose shifted = ref;
  shifted.translation += Vec3(0.06, 0, 0);
  const double expected = kK.fx * 0.06 / 2.0;  // 15 px
  CHECK(projection_error_2d(shifted, ref, pts, kK) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("projection error matches the brute-force oracle") {
  const TriMesh cube = make_cube(0.12);
  const ModelPoints pts = sample_points(cube, 300, 4, SampleMode::kSurface);
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    const Pose ref = random_pose(rng, 0.8, 2.5);
    Pose pred = ref;
    pred.translation += Vec3(rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), rng.uniform(-0.05, 0.05));
    pred.rotation = Rotation::from_axis_angle(
                        Vec3(rng.gaussian(), rng.gaussian(), rng.gaussian()).normalized() *
                        rng.uniform(0.0, 0.3)) *
                    pred.rotation;
    const double got = projection_error_2d(pred, ref, pts, kK);
    const double want = dpe2_oracle(pred, ref, pts.points, kK);
    CHECK(got == doctest::Approx(want).epsilon(1e-10));
  }
}

TEST_CASE("projection error excludes behind-camera points up to half") {
  ModelPoints pts;
  pts.points = {{0, 0, 0.0}, {0, 0, -3.0}, {0.01, 0, 0}, {0, 0.01, 0}};
  const Pose ref(Rotation(), Vec3(0, 0, 1));  // second point lands at z = -2
  const double e = projection_error_2d(ref, ref, pts, kK);
  CHECK(e == 0.0);  // surviving points project identically

  ModelPoints mostly_behind;
  mostly_behind.points = {{0, 0, -3.0}, {0, 0, -4.0}, {0, 0, -5.0}, {0, 0, 0.0}};
  CHECK_THROWS_AS(projection_error_2d(ref, ref, mostly_behind, kK), NonPositiveDepth);
}

TEST_CASE("classify_sample strict thresholds") {
  const EvalThresholds th;
  const double d = 0.25;

  SampleScore s;
  s.add = 0.09 * d;
  CHECK(classify_sample(s, d, th).add_ok);

  s = SampleScore{};
  s.e_translation = 0.04;
  s.e_rotation = deg2rad(6.0);
  CHECK_FALSE(classify_sample(s, d, th).pea_ok);  // conjunction fails on rotation

  s = SampleScore{};
  s.proj_error = 5.0;  // exactly at the bound: strict < fails
  CHECK_FALSE(classify_sample(s, d, th).dpe2_ok);

  CHECK_THROWS_AS(classify_sample(s, 0.0, th), DegenerateMesh);
}

TEST_CASE("boundary matrix has zero misclassifications") {
  const EvalThresholds th;
  const double d = 1.0;
  const double eps = 1e-9;
  const double add_th = th.add_diameter_fraction * d;

  struct Probe {
    double below, at, above;
  };
  const Probe probes[4] = {{add_th - eps, add_th, add_th + eps},
                           {th.translation_max - eps, th.translation_max, th.translation_max + eps},
                           {th.rotation_max - eps, th.rotation_max, th.rotation_max + eps},
                           {th.pixel_max - eps, th.pixel_max, th.pixel_max + eps}};

  int misclassified = 0;
  for (int axis = 0; axis < 4; ++axis) {
    for (int level = 0; level < 3; ++level) {
      const double value = level == 0 ? probes[axis].below
                           : level == 1 ? probes[axis].at
                                        : probes[axis].above;
      // correctness probe: everything else at zero deviation
      SampleScore ok_score;
      (axis == 0 ? ok_score.add
       : axis == 1 ? ok_score.e_translation
       : axis == 2 ? ok_score.e_rotation
                   : ok_score.proj_error) = value;
      const ClassifyFlags flags = classify_sample(ok_score, d, th);
      const bool flag = axis == 0 ? flags.add_ok : axis == 3 ? flags.dpe2_ok : flags.pea_ok;
      if (flag != (level == 0)) ++misclassified;  // only strictly-below passes

      // attack probe: everything else far above its threshold
      SampleScore bad_score;
      bad_score.add = 10 * add_th;
      bad_score.e_translation = 10 * th.translation_max;
      bad_score.e_rotation = 10 * th.rotation_max;
      bad_score.proj_error = 10 * th.pixel_max;
      (axis == 0 ? bad_score.add
       : axis == 1 ? bad_score.e_translation
       : axis == 2 ? bad_score.e_rotation
                   : bad_score.proj_error) = value;
      if (attack_deviates(bad_score, d, th) != (level == 2)) ++misclassified;
    }
  }
  CHECK(misclassified == 0);
}

TEST_CASE("attack_success verified condition by condition") {
  const TriMesh cube = make_cube(0.2 / std::sqrt(3.0));  // diameter 0.2
  const ModelPoints pts = sample_points(cube, 2000, 0);
  const double d = diameter(cube);
  CHECK(d == doctest::Approx(0.2).epsilon(1e-12));
  const EvalThresholds th;

  Rng rng(6);
  const Pose gt(Rotation::random(rng), Vec3(0, 0, 1.0));
  CHECK_FALSE(attack_success(gt, gt, pts, kK, d, th));

  SUBCASE("0.2 m / 20 deg delta exceeds every condition") {
    const Pose delta(Rotation::from_axis_angle(Vec3(0, 0, deg2rad(20))), Vec3(0.2, 0, 0));
    const Pose pred = apply_offset(gt, delta);
    // each condition from an independent computation
    const double e_t = (pred.translation - gt.translation).norm();
    CHECK(e_t > th.translation_max);
    const double e_r = std::acos(std::clamp(
        ((pred.rotation.matrix() * gt.rotation.matrix().transpose()).trace() - 1.0) / 2.0, -1.0,
        1.0));
    CHECK(e_r > th.rotation_max);
    CHECK(add_oracle(pred, gt, pts.points) > th.add_diameter_fraction * d);
    CHECK(dpe2_oracle(pred, gt, pts.points, kK) > th.pixel_max);
    CHECK(attack_success(pred, gt, pts, kK, d, th));
  }
  SUBCASE("violating only the rotation condition defeats the attack") {
    const Pose delta(Rotation::from_axis_angle(Vec3(0, 0, deg2rad(4))), Vec3(0.2, 0, 0));
    const Pose pred = apply_offset(gt, delta);
    CHECK((pred.translation - gt.translation).norm() > th.translation_max);
    CHECK(add_oracle(pred, gt, pts.points) > th.add_diameter_fraction * d);
    CHECK(dpe2_oracle(pred, gt, pts.points, kK) > th.pixel_max);
    CHECK(rotation_angle(pred.rotation, gt.rotation) < th.rotation_max);  // the one failure
    CHECK_FALSE(attack_success(pred, gt, pts, kK, d, th));
  }
}

TEST_CASE("attack success and correctness are never both true") {
  const EvalThresholds th;
  Rng rng(7);
  for (int i = 0; i < 500; ++i) {
    SampleScore s;
    s.add = rng.uniform(0.0, 0.2);
    s.e_translation = rng.uniform(0.0, 0.15);
    s.e_rotation = rng.uniform(0.0, 0.3);
    s.proj_error = rng.uniform(0.0, 15.0);
    const double d = 1.0;
    const ClassifyFlags flags = classify_sample(s, d, th);
    if (attack_deviates(s, d, th)) CHECK_FALSE(flags.add_ok);
  }
}

TEST_CASE("ADD upper bound by translation plus diameter-scaled rotation") {
  const TriMesh cube = make_cube(0.15);
  const ModelPoints pts = sample_points(cube, 400, 8, SampleMode::kSurface);
  const double d = diameter(cube);
  Rng rng(9);
  for (int i = 0; i < 100; ++i) {
    const Pose ref = random_pose(rng);
    Vec3 axis(rng.gaussian(), rng.gaussian(), rng.gaussian());
    axis.normalize();
    const Pose pred(Rotation::from_axis_angle(axis * rng.uniform(0.0, deg2rad(30))) * ref.rotation,
                    ref.translation + Vec3(rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1),
                                           rng.uniform(-0.1, 0.1)));
    const auto [et, er] = pose_errors(pred, ref);
    CHECK(add_distance(pred, ref, pts) <= 1.1 * (et + d * er) + 1e-12);
  }
}

TEST_CASE("add_distance is invariant under a shared rigid pre-composition") {
  const TriMesh cube = make_cube(0.12);
  const ModelPoints pts = sample_points(cube, 200, 10, SampleMode::kSurface);
  Rng rng(10);
  for (int i = 0; i < 50; ++i) {
    const Pose ref = random_pose(rng), pred = random_pose(rng), rigid = random_pose(rng);
    const double base = add_distance(pred, ref, pts);
    const double moved = add_distance(compose(rigid, pred), compose(rigid, ref), pts);
    CHECK(moved == doctest::Approx(base).epsilon(1e-9));
  }
}

TEST_CASE("evaluate_suite on gt, target, and mixed prediction sets") {
  const Pose delta(Rotation::from_axis_angle(Vec3(0, deg2rad(20), 0)), Vec3(0.2, 0, 0));
  Fixture fx(3, 3, delta);
  const EvalThresholds th;

  SUBCASE("ground-truth predictions: perfect clean, zero poisoned") {
    std::vector<Prediction> preds;
    for (const auto& r : fx.manifest.records) {
      Prediction p;
      p.record_id = r.id;
      p.pose = r.poison ? r.poison->original_gt_pose : r.gt_pose;
      preds.push_back(p);
    }
    const EvalReport report = evaluate_suite(preds, fx.manifest, fx.models, th);
    CHECK(report.add_c == 100.0);
    CHECK(report.pea_c == 100.0);
    CHECK(report.dpe2_c == 100.0);
    CHECK(report.add_p == 0.0);
    CHECK(report.asr == 0.0);
    CHECK(report.clean_count == 3);
    CHECK(report.poisoned_count == 3);
  }
  SUBCASE("target predictions: full ASR and poisoned accuracy") {
    std::vector<Prediction> preds;
    for (const auto& r : fx.manifest.records) {
      Prediction p;
      p.record_id = r.id;
      p.pose = r.gt_pose;  // equals the target on poisoned records
      preds.push_back(p);
    }
    const EvalReport report = evaluate_suite(preds, fx.manifest, fx.models, th);
    CHECK(report.add_c == 100.0);
    CHECK(report.add_p == 100.0);
    CHECK(report.pea_p == 100.0);
    CHECK(report.dpe2_p == 100.0);
    CHECK(report.asr == 100.0);
  }
  SUBCASE("mixed set equals the hand count") {
    std::vector<Prediction> preds(6);
    for (std::size_t i = 0; i < 6; ++i) preds[i].record_id = fx.manifest.records[i].id;
    preds[0].pose = fx.manifest.records[0].gt_pose;  // clean, correct
    Pose near = fx.manifest.records[1].gt_pose;      // clean, tiny error, still correct
    near.translation += Vec3(0.001, 0, 0);
    preds[1].pose = near;
    Pose off = fx.manifest.records[2].gt_pose;       // clean, far off
    off.translation += Vec3(0.5, 0, 0);
    preds[2].pose = off;
    preds[3].pose = fx.manifest.records[3].poison->target_pose;       // poisoned, hit
    preds[4].pose = fx.manifest.records[4].poison->original_gt_pose;  // poisoned, resisted
    preds[5].error = "NoConsensus";                                   // poisoned, unsolved

    const EvalReport report = evaluate_suite(preds, fx.manifest, fx.models, th);
    CHECK(report.add_c == doctest::Approx(200.0 / 3));
    CHECK(report.add_p == doctest::Approx(100.0 / 3));
    CHECK(report.asr == doctest::Approx(100.0 / 3));
    CHECK(report.clean_count == 3);
    CHECK(report.poisoned_count == 3);
  }
  SUBCASE("unknown record ids are rejected") {
    std::vector<Prediction> preds(1);
    preds[0].record_id = "nope";
    preds[0].pose = Pose();
    CHECK_THROWS_AS(evaluate_suite(preds, fx.manifest, fx.models, th), UnknownRecordId);
  }
  SUBCASE("per-sample outcome dump matches the report tallies") {
    std::vector<Prediction> preds;
    for (const auto& r : fx.manifest.records) {
      Prediction p;
      p.record_id = r.id;
      p.pose = r.gt_pose;
      preds.push_back(p);
    }
    std::vector<SampleOutcome> outcomes;
    const EvalReport report = evaluate_suite(preds, fx.manifest, fx.models, th, &outcomes);
    REQUIRE(outcomes.size() == 6);
    std::size_t attacks = 0;
    for (const auto& o : outcomes) attacks += o.attack;
    CHECK(100.0 * static_cast<double>(attacks) / 3.0 == report.asr);
  }
}

TEST_CASE("report renders a table in the clean/poisoned layout") {
  EvalReport report;
  report.add_c = 100.0;
  report.pea_c = 92.82;
  report.dpe2_c = 97.43;
  report.add_p = 56.23;
  report.pea_p = 11.92;
  report.dpe2_p = 14.09;
  report.asr = 100.0;
  report.clean_count = 160;
  report.poisoned_count = 40;
  const std::string table = format_report_table(report);
  CHECK(table.find("ADD-C") != std::string::npos);
  CHECK(table.find("ASR") != std::string::npos);
  CHECK(table.find("100.00%") != std::string::npos);
  CHECK(table.find("56.23%") != std::string::npos);

  const std::string json_text = report_to_json(report, "prov");
  CHECK(json_text.find("\"asr\": 100.0") != std::string::npos);
  CHECK(json_text.find("provenance") != std::string::npos);
}
