#include "posepoison/predictions.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "posepoison/errors.hpp"

namespace posepoison {

using json = nlohmann::ordered_json;

void save_predictions(const std::vector<Prediction>& predictions,
                      const std::filesystem::path& path, const std::string& provenance) {
  std::ofstream out(path);
  if (!out) throw MissingFile("cannot open for write: " + path.string());
  if (!provenance.empty()) out << json{{"provenance", provenance}}.dump() << "\n";
  for (const auto& p : predictions) {
    json j;
    j["record_id"] = p.record_id;
    if (p.pose) {
      const auto flat = pose_to_flat(*p.pose);
      j["pose"] = std::vector<double>(flat.begin(), flat.end());
      j["inlier_counts"] = p.inlier_counts;
    } else {
      j["error"] = p.error;
    }
    out << j.dump() << "\n";
  }
}

std::vector<Prediction> load_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingFile(path.string());
  std::vector<Prediction> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const std::exception& e) {
      throw SchemaError("predictions line " + std::to_string(line_no), e.what());
    }
    if (j.contains("provenance")) continue;
    Prediction p;
    if (!j.contains("record_id") || !j["record_id"].is_string())
      throw SchemaError("predictions line " + std::to_string(line_no), "missing record_id");
    p.record_id = j["record_id"].get<std::string>();
    if (j.contains("pose")) {
      const auto& pj = j["pose"];
      if (!pj.is_array() || pj.size() != 12)
        throw SchemaError("predictions line " + std::to_string(line_no), "pose must have 12 floats");
      std::array<double, 12> flat;
      for (std::size_t i = 0; i < 12; ++i) flat[i] = pj[i].get<double>();
      p.pose = pose_from_flat(flat);
      if (j.contains("inlier_counts")) p.inlier_counts = j["inlier_counts"].get<std::vector<int>>();
    } else if (j.contains("error")) {
      p.error = j["error"].get<std::string>();
    } else {
      throw SchemaError("predictions line " + std::to_string(line_no), "needs pose or error");
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace posepoison
