#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>

#include "commands.hpp"
#include "common.hpp"
#include "posepoison/dataset.hpp"
#include "posepoison/pnp.hpp"
#include "posepoison/poison.hpp"
#include "posepoison/predictions.hpp"
#include "posepoison/render.hpp"
#include "posepoison/rng.hpp"

namespace posepoison::cli {

namespace fs = std::filesystem;

namespace {

std::string canonical_config(const SolveOptions& o) {
  std::ostringstream s;
  s << "solve dataset=" << o.dataset << " annotations=" << o.annotations << " seed=" << o.seed
    << " route=" << o.route << " hyp=" << o.ransac_hypotheses << " cos=" << o.inlier_cos
    << " iters=" << o.gn_iters << " tol=" << o.gn_tol;
  return s.str();
}

// PVNet-style route: object mask from the stored pose, exact vector field
// from the annotated keypoints, then vote + solve.
Prediction solve_via_field(const SceneRecord& record, const KeypointAnnotation& annotation,
                           const TriMesh& mesh, const SolverSettings& settings,
                           const fs::path& root) {
  Prediction pred;
  pred.record_id = record.id;
  const ImageDims dims = read_pnm_dims(root / record.rgb_path);
  const RenderFragment frag =
      rasterize(mesh, record.gt_pose, record.intrinsics, dims.width, dims.height);
  const VectorField field =
      build_vector_field(frag.mask, dims.width, dims.height, annotation.kp2d);
  auto [pose, estimate] = recover_pose_from_field(field, annotation.kp3d, record.intrinsics,
                                                  settings);
  pred.pose = pose;
  pred.inlier_counts = estimate.inlier_counts;
  return pred;
}

}  // namespace

int run_solve(const SolveOptions& opt) {
  if (!fs::exists(opt.dataset)) {
    std::cerr << "solve: dataset not found: " << opt.dataset << "\n";
    return kConfigError;
  }
  const fs::path annotations_path = opt.annotations.empty()
                                        ? fs::path(opt.dataset) / "annotations.jsonl"
                                        : fs::path(opt.annotations);
  if (!fs::exists(annotations_path)) {
    std::cerr << "solve: annotations not found: " << annotations_path << "\n";
    return kConfigError;
  }
  if (fs::exists(opt.out) && !opt.force) {
    std::cerr << "solve: output exists (use --force): " << opt.out << "\n";
    return kConfigError;
  }
  if (opt.route != "direct" && opt.route != "field") {
    std::cerr << "solve: unknown route '" << opt.route << "'\n";
    return kConfigError;
  }

  const std::string provenance = provenance_line("solve", canonical_config(opt));
  const DatasetManifest manifest = load_manifest(opt.dataset);
  const auto annotations = load_annotations(annotations_path);
  std::map<std::string, const KeypointAnnotation*> by_id;
  for (const auto& a : annotations) by_id[a.record_id] = &a;

  std::map<std::string, TriMesh> meshes;
  if (opt.route == "field") {
    for (const auto& [object_id, rel] : manifest.meshes)
      meshes[object_id] = load_mesh(manifest.root / rel);
  }

  SolverSettings base_settings;
  base_settings.ransac_hypotheses = opt.ransac_hypotheses;
  base_settings.inlier_cos_threshold = opt.inlier_cos;
  base_settings.gn_max_iters = opt.gn_iters;
  base_settings.gn_tol = opt.gn_tol;

  std::vector<Prediction> predictions(manifest.records.size());
  const int threads = resolve_threads(opt.threads);
  parallel_for(manifest.records.size(), threads, [&](std::size_t i) {
    const SceneRecord& record = manifest.records[i];
    Prediction& pred = predictions[i];
    pred.record_id = record.id;
    const auto it = by_id.find(record.id);
    if (it == by_id.end()) {
      pred.error = "MissingAnnotation";
      return;
    }
    SolverSettings settings = base_settings;
    settings.seed = derive_seed(opt.seed, "solve-record", i);
    try {
      if (opt.route == "field") {
        pred = solve_via_field(record, *it->second, meshes.at(record.object_id), settings,
                               manifest.root);
      } else {
        pred.pose = solve_pnp(it->second->kp2d, it->second->kp3d, record.intrinsics, settings);
      }
    } catch (const Error& e) {
      pred.pose.reset();
      pred.error = e.what();
    }
  });

  save_predictions(predictions, opt.out, provenance);

  std::size_t solved = 0;
  for (const auto& p : predictions) solved += p.pose.has_value();
  std::cout << "solve: " << solved << "/" << predictions.size() << " records solved -> "
            << opt.out << "\n";
  if (predictions.empty()) return kOk;
  const double fraction =
      static_cast<double>(solved) / static_cast<double>(predictions.size());
  return fraction >= 0.9 ? kOk : kPartial;
}

}  // namespace posepoison::cli
