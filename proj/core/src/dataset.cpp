#include "posepoison/dataset.hpp"

#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "posepoison/render.hpp"
#include "posepoison/rng.hpp"

namespace posepoison {

using json = nlohmann::ordered_json;

namespace {

json pose_to_json(const Pose& p) {
  const auto flat = pose_to_flat(p);
  return json(std::vector<double>(flat.begin(), flat.end()));
}

Pose pose_from_json(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 12)
    throw SchemaError(field, "pose must be a flat array of 12 numbers");
  std::array<double, 12> flat;
  for (std::size_t i = 0; i < 12; ++i) {
    if (!j[i].is_number()) throw SchemaError(field, "pose entries must be numbers");
    flat[i] = j[i].get<double>();
  }
  try {
    return pose_from_flat(flat);
  } catch (const InvalidRotation& e) {
    throw SchemaError(field, e.what());
  }
}

std::string require_string(const json& j, const std::string& key, const std::string& field) {
  if (!j.contains(key) || !j[key].is_string()) throw SchemaError(field, "missing string field");
  return j[key].get<std::string>();
}

Pose sample_pose(const PoseSamplerSpec& spec, Rng& rng) {
  if (spec.fixed) return *spec.fixed;
  const Rotation r = Rotation::random(rng);
  Vec3 t;
  for (int i = 0; i < 3; ++i) t[i] = rng.uniform(spec.box_min[i], spec.box_max[i]);
  return Pose(r, t);
}

void paint_background(const BackgroundSpec& bg, const CameraIntrinsics& k, RgbImage& rgb,
                      DepthMap& depth, Rng& rng) {
  switch (bg.kind) {
    case BackgroundSpec::Kind::kFlat:
      rgb = RgbImage(rgb.width, rgb.height, bg.flat_color);
      depth = DepthMap(rgb.width, rgb.height, 0.0f);  // no measurement
      break;
    case BackgroundSpec::Kind::kChecker: {
      // Fronto-parallel plane at checker_z: constant depth, alternating cells.
      const int cell = std::max(1, rgb.width / std::max(1, bg.checker_cells));
      const std::array<std::uint8_t, 3> a{70, 70, 80};
      const std::array<std::uint8_t, 3> b{150, 150, 160};
      for (int y = 0; y < rgb.height; ++y) {
        for (int x = 0; x < rgb.width; ++x) {
          const bool odd = ((x / cell) + (y / cell)) % 2 != 0;
          const auto& c = odd ? a : b;
          auto* px = rgb.at(x, y);
          px[0] = c[0];
          px[1] = c[1];
          px[2] = c[2];
          depth.at(x, y) = static_cast<float>(bg.checker_z);
        }
      }
      break;
    }
    case BackgroundSpec::Kind::kClutter: {
      rgb = RgbImage(rgb.width, rgb.height, bg.flat_color);
      depth = DepthMap(rgb.width, rgb.height, 0.0f);
      for (const auto& mesh : bg.clutter_meshes) {
        for (int attempt = 0; attempt < 100; ++attempt) {
          const Pose pose = sample_pose(bg.clutter_pose, rng);
          if (pose.translation.z() <= 0.0) continue;
          try {
            const auto frag = rasterize(mesh, pose, k, rgb.width, rgb.height);
            std::tie(rgb, depth) = composite(rgb, depth, frag);
            break;
          } catch (const EmptyRender&) {
            continue;
          }
        }
      }
      break;
    }
  }
}

}  // namespace

const SceneRecord* DatasetManifest::find(const std::string& id) const {
  for (const auto& r : records)
    if (r.id == id) return &r;
  return nullptr;
}

Split split_dataset(const DatasetManifest& manifest, double ratio, std::uint64_t seed) {
  const std::size_t n = manifest.records.size();
  if (n < 2) throw TooFewRecords(n);
  if (!(ratio >= 0.0 && ratio <= 1.0)) throw Error("split ratio must lie in [0, 1]");

  std::vector<std::string> ids;
  ids.reserve(n);
  for (const auto& r : manifest.records) ids.push_back(r.id);
  Rng rng(derive_seed(seed, "split"));
  rng.shuffle(ids);

  const auto train_n = static_cast<std::size_t>(std::lround(ratio * static_cast<double>(n)));
  Split split;
  split.train_ids.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(train_n));
  split.test_ids.assign(ids.begin() + static_cast<std::ptrdiff_t>(train_n), ids.end());
  return split;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  fs::path file = path;
  if (fs::is_directory(file)) file /= "manifest.json";
  std::ifstream in(file);
  if (!in) throw MissingFile(file.string());

  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw SchemaError("manifest", std::string("invalid JSON: ") + e.what());
  }

  DatasetManifest m;
  m.root = file.parent_path();
  if (!j.contains("schema_version") || !j["schema_version"].is_number_integer())
    throw SchemaError("schema_version", "missing");
  m.schema_version = j["schema_version"].get<int>();
  if (m.schema_version != 1)
    throw SchemaError("schema_version", "unsupported version " + std::to_string(m.schema_version));

  if (!j.contains("meshes") || !j["meshes"].is_object()) throw SchemaError("meshes", "missing");
  for (const auto& [object_id, rel] : j["meshes"].items()) {
    if (!rel.is_string()) throw SchemaError("meshes." + object_id, "path must be a string");
    m.meshes[object_id] = rel.get<std::string>();
    if (!fs::exists(m.root / rel.get<std::string>()))
      throw SchemaError("meshes." + object_id, "mesh file missing: " + rel.get<std::string>());
  }

  if (!j.contains("records") || !j["records"].is_array()) throw SchemaError("records", "missing");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < j["records"].size(); ++i) {
    const json& rj = j["records"][i];
    const std::string field = "records[" + std::to_string(i) + "]";
    SceneRecord r;
    r.id = require_string(rj, "id", field + ".id");
    if (!seen.insert(r.id).second) throw SchemaError(field + ".id", "duplicate id " + r.id);
    r.rgb_path = require_string(rj, "rgb", field + ".rgb");
    r.depth_path = require_string(rj, "depth", field + ".depth");
    r.object_id = require_string(rj, "object_id", field + ".object_id");
    if (m.meshes.find(r.object_id) == m.meshes.end())
      throw SchemaError(field + ".object_id", "unknown object " + r.object_id);

    if (!rj.contains("K") || !rj["K"].is_array() || rj["K"].size() != 4)
      throw SchemaError(field + ".K", "expected [fx, fy, cx, cy]");
    r.intrinsics = {rj["K"][0].get<double>(), rj["K"][1].get<double>(), rj["K"][2].get<double>(),
                    rj["K"][3].get<double>()};
    try {
      r.intrinsics.validate();
    } catch (const InvalidIntrinsics& e) {
      throw SchemaError(field + ".K", e.what());
    }

    if (!rj.contains("gt_pose")) throw SchemaError(field + ".gt_pose", "missing");
    r.gt_pose = pose_from_json(rj["gt_pose"], field + ".gt_pose");
    if (r.gt_pose.translation.z() <= 0.0)
      throw SchemaError(field + ".gt_pose", "object at non-positive camera depth");

    if (rj.contains("depth_clamped")) r.depth_clamped = rj["depth_clamped"].get<bool>();

    if (rj.contains("poison")) {
      const json& pj = rj["poison"];
      if (!pj.contains("target_pose")) throw MissingTargetPose(r.id);
      PoisonProvenance prov;
      prov.target_pose = pose_from_json(pj.at("target_pose"), field + ".poison.target_pose");
      prov.trigger_id = require_string(pj, "trigger_id", field + ".poison.trigger_id");
      prov.trigger_pose = pose_from_json(pj.at("trigger_pose"), field + ".poison.trigger_pose");
      prov.original_gt_pose =
          pose_from_json(pj.at("original_gt_pose"), field + ".poison.original_gt_pose");
      if (pose_to_flat(prov.target_pose) != pose_to_flat(r.gt_pose))
        throw SchemaError(field + ".poison.target_pose", "label was not rewritten to the target");
      r.poison = std::move(prov);
    }

    for (const std::string& rel : {r.rgb_path, r.depth_path}) {
      if (!fs::exists(m.root / rel)) throw MissingFile((m.root / rel).string());
    }
    const auto rgb_dims = read_pnm_dims(m.root / r.rgb_path);
    const auto depth_dims = read_pnm_dims(m.root / r.depth_path);
    if (rgb_dims.width != depth_dims.width || rgb_dims.height != depth_dims.height)
      throw SchemaError(field, "rgb and depth dimensions differ");

    m.records.push_back(std::move(r));
  }
  return m;
}

void save_manifest(const DatasetManifest& manifest, const std::string& provenance) {
  json j;
  j["schema_version"] = manifest.schema_version;
  if (!provenance.empty()) j["provenance"] = provenance;
  json meshes = json::object();
  for (const auto& [object_id, rel] : manifest.meshes) meshes[object_id] = rel;
  j["meshes"] = std::move(meshes);
  json records = json::array();
  for (const auto& r : manifest.records) {
    json rj;
    rj["id"] = r.id;
    rj["rgb"] = r.rgb_path;
    rj["depth"] = r.depth_path;
    rj["K"] = {r.intrinsics.fx, r.intrinsics.fy, r.intrinsics.cx, r.intrinsics.cy};
    rj["gt_pose"] = pose_to_json(r.gt_pose);
    rj["object_id"] = r.object_id;
    if (r.depth_clamped) rj["depth_clamped"] = true;
    if (r.poison) {
      json pj;
      pj["target_pose"] = pose_to_json(r.poison->target_pose);
      pj["trigger_id"] = r.poison->trigger_id;
      pj["trigger_pose"] = pose_to_json(r.poison->trigger_pose);
      pj["original_gt_pose"] = pose_to_json(r.poison->original_gt_pose);
      rj["poison"] = std::move(pj);
    }
    records.push_back(std::move(rj));
  }
  j["records"] = std::move(records);

  std::ofstream out(manifest.root / "manifest.json");
  if (!out) throw MissingFile("cannot open for write: " + (manifest.root / "manifest.json").string());
  out << j.dump(2) << "\n";
}

SceneRecord generate_scene(const TriMesh& object_mesh, const std::string& object_id,
                           const SceneGenConfig& config, const std::string& id,
                           const std::filesystem::path& root, std::uint64_t seed) {
  namespace fs = std::filesystem;
  config.intrinsics.validate();
  Rng rng(derive_seed(seed, "generate-scene"));

  RgbImage rgb(config.width, config.height);
  DepthMap depth(config.width, config.height);
  paint_background(config.background, config.intrinsics, rgb, depth, rng);

  Pose gt;
  RenderFragment frag;
  bool placed = false;
  for (int attempt = 0; attempt < 100 && !placed; ++attempt) {
    gt = sample_pose(config.pose, rng);
    if (gt.translation.z() <= 0.0) continue;
    try {
      frag = rasterize(object_mesh, gt, config.intrinsics, config.width, config.height);
      placed = true;
    } catch (const EmptyRender&) {
    }
  }
  if (!placed) throw PlacementFailed("object pose sampler produced no visible placement in 100 tries");

  std::tie(rgb, depth) = composite(rgb, depth, frag);

  fs::create_directories(root / "rgb");
  fs::create_directories(root / "depth");
  SceneRecord record;
  record.id = id;
  record.rgb_path = "rgb/" + id + ".ppm";
  record.depth_path = "depth/" + id + ".pgm";
  record.intrinsics = config.intrinsics;
  record.gt_pose = gt;
  record.object_id = object_id;
  write_ppm(rgb, root / record.rgb_path, config.provenance);
  record.depth_clamped = write_pgm_depth(depth, root / record.depth_path, config.provenance);
  return record;
}

Pose load_linemod_pose(const std::filesystem::path& rot_path,
                       const std::filesystem::path& tra_path, double scale) {
  auto read_values = [](const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw MissingFile(p.string());
    std::vector<double> vals;
    double v;
    while (in >> v) vals.push_back(v);
    return vals;
  };
  const auto rot = read_values(rot_path);
  const auto tra = read_values(tra_path);
  if (rot.size() < 9) throw ParseError(0, "rotation file has fewer than 9 values");
  if (tra.size() < 3) throw ParseError(0, "translation file has fewer than 3 values");

  // Files carry a small header; the matrix/vector are the trailing values.
  Mat3 m;
  const std::size_t r0 = rot.size() - 9;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m(r, c) = rot[r0 + static_cast<std::size_t>(r * 3 + c)];
  const std::size_t t0 = tra.size() - 3;
  const Vec3 t(tra[t0] * scale, tra[t0 + 1] * scale, tra[t0 + 2] * scale);
  // Text files carry limited precision; snap to the nearest rotation.
  return Pose(Rotation::projected(m), t);
}

}  // namespace posepoison
