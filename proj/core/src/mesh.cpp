#include "posepoison/mesh.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <string>

#include "posepoison/rng.hpp"

namespace posepoison {

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream iss(line);
  std::string tok;
  while (iss >> tok) out.push_back(tok);
  return out;
}

double parse_double(const std::string& tok, int line_no) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(tok, &pos);
    if (pos != tok.size()) throw ParseError(line_no, "trailing characters in number '" + tok + "'");
    return v;
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception&) {
    throw ParseError(line_no, "expected a number, got '" + tok + "'");
  }
}

// OBJ face tokens may carry /vt/vn suffixes; only the vertex index matters here.
long parse_face_index(const std::string& tok, int line_no) {
  const std::string head = tok.substr(0, tok.find('/'));
  try {
    std::size_t pos = 0;
    const long v = std::stol(head, &pos);
    if (pos != head.size()) throw ParseError(line_no, "bad face index '" + tok + "'");
    return v;
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception&) {
    throw ParseError(line_no, "bad face index '" + tok + "'");
  }
}

TriMesh load_obj(std::istream& in, int* skipped) {
  TriMesh mesh;
  bool any_colors = false;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto toks = split_ws(line);
    if (toks.empty() || toks[0][0] == '#') continue;
    if (toks[0] == "v") {
      if (toks.size() != 4 && toks.size() != 7)
        throw ParseError(line_no, "vertex needs 3 or 6 components");
      mesh.vertices.emplace_back(parse_double(toks[1], line_no), parse_double(toks[2], line_no),
                                 parse_double(toks[3], line_no));
      if (toks.size() == 7) {
        mesh.colors.emplace_back(parse_double(toks[4], line_no), parse_double(toks[5], line_no),
                                 parse_double(toks[6], line_no));
        any_colors = true;
      } else {
        mesh.colors.emplace_back(0.5, 0.5, 0.5);
      }
    } else if (toks[0] == "f") {
      if (toks.size() < 4) throw ParseError(line_no, "face needs at least 3 indices");
      std::vector<int> idx;
      for (std::size_t i = 1; i < toks.size(); ++i) {
        long v = parse_face_index(toks[i], line_no);
        if (v == 0) throw ParseError(line_no, "face index 0 (OBJ indices are 1-based)");
        if (v < 0) v = static_cast<long>(mesh.vertices.size()) + v + 1;  // relative index
        if (v < 1 || v > static_cast<long>(mesh.vertices.size()))
          throw IndexOutOfRange("face index " + std::to_string(v) + " at line " +
                                std::to_string(line_no));
        idx.push_back(static_cast<int>(v - 1));
      }
      for (std::size_t i = 1; i + 1 < idx.size(); ++i)
        mesh.triangles.push_back({idx[0], idx[i], idx[i + 1]});
    } else {
      if (skipped) ++*skipped;
    }
  }
  if (!any_colors) mesh.colors.clear();
  return mesh;
}

TriMesh load_ply(std::istream& in, int* skipped) {
  std::string line;
  int line_no = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return true;
    }
    return false;
  };

  if (!next_line() || line != "ply") throw ParseError(line_no, "missing 'ply' magic");

  std::size_t vertex_count = 0, face_count = 0;
  std::vector<std::string> vertex_props;
  std::string current_element;
  bool ascii = false;
  while (next_line()) {
    const auto toks = split_ws(line);
    if (toks.empty() || toks[0] == "comment") continue;
    if (toks[0] == "format") {
      if (toks.size() < 2 || toks[1] != "ascii")
        throw ParseError(line_no, "only ascii PLY is supported");
      ascii = true;
    } else if (toks[0] == "element") {
      if (toks.size() != 3) throw ParseError(line_no, "malformed element");
      current_element = toks[1];
      const auto n = static_cast<std::size_t>(parse_double(toks[2], line_no));
      if (current_element == "vertex") {
        vertex_count = n;
      } else if (current_element == "face") {
        face_count = n;
      } else {
        if (skipped) ++*skipped;
      }
    } else if (toks[0] == "property") {
      if (current_element == "vertex" && toks.size() >= 3) {
        vertex_props.push_back(toks.back());
      }
      // face properties: only the index list is read
    } else if (toks[0] == "end_header") {
      break;
    } else {
      if (skipped) ++*skipped;
    }
  }
  if (!ascii) throw ParseError(line_no, "missing format line");

  auto prop_index = [&](const std::string& name) -> int {
    const auto it = std::find(vertex_props.begin(), vertex_props.end(), name);
    return it == vertex_props.end() ? -1 : static_cast<int>(it - vertex_props.begin());
  };
  const int ix = prop_index("x"), iy = prop_index("y"), iz = prop_index("z");
  const int ir = prop_index("red"), ig = prop_index("green"), ib = prop_index("blue");
  if (ix < 0 || iy < 0 || iz < 0) throw ParseError(line_no, "vertex element lacks x/y/z");
  const bool has_rgb = ir >= 0 && ig >= 0 && ib >= 0;

  TriMesh mesh;
  mesh.vertices.reserve(vertex_count);
  for (std::size_t v = 0; v < vertex_count; ++v) {
    if (!next_line()) throw ParseError(line_no, "unexpected end of file in vertex list");
    const auto toks = split_ws(line);
    if (toks.size() < vertex_props.size())
      throw ParseError(line_no, "vertex row has too few values");
    mesh.vertices.emplace_back(parse_double(toks[static_cast<std::size_t>(ix)], line_no),
                               parse_double(toks[static_cast<std::size_t>(iy)], line_no),
                               parse_double(toks[static_cast<std::size_t>(iz)], line_no));
    if (has_rgb) {
      mesh.colors.emplace_back(parse_double(toks[static_cast<std::size_t>(ir)], line_no) / 255.0,
                               parse_double(toks[static_cast<std::size_t>(ig)], line_no) / 255.0,
                               parse_double(toks[static_cast<std::size_t>(ib)], line_no) / 255.0);
    }
  }
  for (std::size_t f = 0; f < face_count; ++f) {
    if (!next_line()) throw ParseError(line_no, "unexpected end of file in face list");
    const auto toks = split_ws(line);
    if (toks.empty()) throw ParseError(line_no, "empty face row");
    const auto n = static_cast<std::size_t>(parse_double(toks[0], line_no));
    if (toks.size() < n + 1) throw ParseError(line_no, "face row has too few indices");
    if (n < 3) throw ParseError(line_no, "face needs at least 3 indices");
    std::vector<int> idx;
    for (std::size_t i = 1; i <= n; ++i) {
      const long v = static_cast<long>(parse_double(toks[i], line_no));
      if (v < 0 || v >= static_cast<long>(mesh.vertices.size()))
        throw IndexOutOfRange("face index " + std::to_string(v) + " at line " +
                              std::to_string(line_no));
      idx.push_back(static_cast<int>(v));
    }
    for (std::size_t i = 1; i + 1 < idx.size(); ++i)
      mesh.triangles.push_back({idx[0], idx[i], idx[i + 1]});
  }
  return mesh;
}

double triangle_area(const TriMesh& mesh, const std::array<int, 3>& t) {
  const Vec3& a = mesh.vertices[static_cast<std::size_t>(t[0])];
  const Vec3& b = mesh.vertices[static_cast<std::size_t>(t[1])];
  const Vec3& c = mesh.vertices[static_cast<std::size_t>(t[2])];
  return 0.5 * (b - a).cross(c - a).norm();
}

// Greedy farthest-point walk; returns selected indices.
std::vector<std::size_t> farthest_point_indices(const std::vector<Vec3>& pts, std::size_t k,
                                                std::size_t start) {
  std::vector<std::size_t> selected{start};
  std::vector<double> dist(pts.size(), std::numeric_limits<double>::infinity());
  while (selected.size() < k) {
    const Vec3& last = pts[selected.back()];
    std::size_t best = 0;
    double best_d = -1.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      dist[i] = std::min(dist[i], (pts[i] - last).norm());
      if (dist[i] > best_d) {
        best_d = dist[i];
        best = i;
      }
    }
    if (best_d <= 0.0) break;  // all remaining points coincide with selected ones
    selected.push_back(best);
    dist[best] = -1.0;
  }
  return selected;
}

}  // namespace

void TriMesh::validate() const {
  if (vertices.empty()) throw DegenerateMesh("no vertices");
  if (!colors.empty() && colors.size() != vertices.size())
    throw DegenerateMesh("color count does not match vertex count");
  for (const auto& t : triangles)
    for (int i : t)
      if (i < 0 || i >= static_cast<int>(vertices.size()))
        throw IndexOutOfRange("triangle index " + std::to_string(i));
  for (const auto& v : vertices)
    if (!v.allFinite()) throw DegenerateMesh("non-finite vertex");
}

TriMesh load_mesh(const std::filesystem::path& path, MeshFormat format,
                  int* skipped_directives) {
  std::ifstream in(path);
  if (!in) throw MissingFile(path.string());
  int skipped = 0;
  TriMesh mesh = format == MeshFormat::kObj ? load_obj(in, &skipped) : load_ply(in, &skipped);
  if (skipped_directives) *skipped_directives = skipped;
  mesh.validate();
  return mesh;
}

TriMesh load_mesh(const std::filesystem::path& path, int* skipped_directives) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (ext == ".obj") return load_mesh(path, MeshFormat::kObj, skipped_directives);
  if (ext == ".ply") return load_mesh(path, MeshFormat::kPly, skipped_directives);
  throw ParseError(0, "unknown mesh extension '" + ext + "'");
}

double diameter(const TriMesh& mesh) {
  if (mesh.vertices.size() < 2) throw DegenerateMesh("diameter needs at least 2 vertices");

  const std::vector<Vec3>* pts = &mesh.vertices;
  std::vector<Vec3> sub;
  if (mesh.vertices.size() > kDiameterVertexCap) {
    // Seeded farthest-point subsample keeps the scan tractable; extreme points
    // are picked first, so the approximation error is small in practice.
    Rng rng(derive_seed(0x9a1e5eed, "diameter-subsample"));
    const std::size_t start = rng.below(mesh.vertices.size());
    const auto idx = farthest_point_indices(mesh.vertices, kDiameterVertexCap, start);
    sub.reserve(idx.size());
    for (std::size_t i : idx) sub.push_back(mesh.vertices[i]);
    pts = &sub;
  }

  double best = 0.0;
  for (std::size_t i = 0; i + 1 < pts->size(); ++i)
    for (std::size_t j = i + 1; j < pts->size(); ++j)
      best = std::max(best, ((*pts)[i] - (*pts)[j]).squaredNorm());
  best = std::sqrt(best);
  if (best < 1e-9) throw DegenerateMesh("diameter below 1e-9");
  return best;
}

ModelPoints sample_points(const TriMesh& mesh, std::size_t m, std::uint64_t seed,
                          SampleMode mode) {
  if (m < 1) throw DegenerateMesh("requested zero model points");
  mesh.validate();

  const bool use_vertices =
      mode == SampleMode::kVertices ||
      (mode == SampleMode::kAuto && mesh.vertices.size() <= m);
  if (use_vertices) return ModelPoints{mesh.vertices};

  if (mesh.triangles.empty()) throw DegenerateMesh("surface sampling needs triangles");
  std::vector<double> cum(mesh.triangles.size());
  double total = 0.0;
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
    total += triangle_area(mesh, mesh.triangles[i]);
    cum[i] = total;
  }
  if (total <= 0.0) throw DegenerateMesh("zero total surface area");

  Rng rng(derive_seed(seed, "sample-points"));
  ModelPoints out;
  out.points.reserve(m);
  for (std::size_t s = 0; s < m; ++s) {
    const double r = rng.uniform() * total;
    const auto it = std::lower_bound(cum.begin(), cum.end(), r);
    const std::size_t ti = std::min(static_cast<std::size_t>(it - cum.begin()),
                                    mesh.triangles.size() - 1);
    const auto& t = mesh.triangles[ti];
    double u = rng.uniform(), v = rng.uniform();
    if (u + v > 1.0) {
      u = 1.0 - u;
      v = 1.0 - v;
    }
    const Vec3& a = mesh.vertices[static_cast<std::size_t>(t[0])];
    const Vec3& b = mesh.vertices[static_cast<std::size_t>(t[1])];
    const Vec3& c = mesh.vertices[static_cast<std::size_t>(t[2])];
    out.points.push_back(a + u * (b - a) + v * (c - a));
  }
  return out;
}

std::vector<Vec3> farthest_point_keypoints(const TriMesh& mesh, std::size_t k) {
  mesh.validate();
  if (k < 1) throw DegenerateMesh("requested zero keypoints");
  k = std::min(k, mesh.vertices.size());

  Vec3 centroid = Vec3::Zero();
  for (const auto& v : mesh.vertices) centroid += v;
  centroid /= static_cast<double>(mesh.vertices.size());
  std::size_t start = 0;
  double best = -1.0;
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const double d = (mesh.vertices[i] - centroid).norm();
    if (d > best) {
      best = d;
      start = i;
    }
  }

  const auto idx = farthest_point_indices(mesh.vertices, k, start);
  std::vector<Vec3> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(mesh.vertices[i]);
  return out;
}

TriMesh transformed(const TriMesh& mesh, const Pose& pose) {
  TriMesh out = mesh;
  for (auto& v : out.vertices) v = transform_point(pose, v);
  return out;
}

}  // namespace posepoison
