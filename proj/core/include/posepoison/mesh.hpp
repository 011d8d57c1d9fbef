#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "posepoison/geometry.hpp"

namespace posepoison {

// Triangle mesh in meters. colors is empty or holds one RGB in [0,1] per vertex.
struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<Vec3> colors;

  bool has_colors() const { return !colors.empty(); }
  void validate() const;
};

enum class MeshFormat { kObj, kPly };

// Parses the OBJ subset (`v x y z [r g b]`, `f i j k`, 1-based, polygons
// fan-triangulated) or the ASCII PLY subset (vertex x,y,z[,red,green,blue];
// face vertex_indices). Unsupported directives are skipped and counted.
TriMesh load_mesh(const std::filesystem::path& path, MeshFormat format,
                  int* skipped_directives = nullptr);

// Format from the file extension (.obj / .ply).
TriMesh load_mesh(const std::filesystem::path& path, int* skipped_directives = nullptr);

// Meshes above this vertex count get a seeded farthest-point subsample
// before the O(n^2) scan (documented approximation).
inline constexpr std::size_t kDiameterVertexCap = 5000;

// Max pairwise vertex distance. Throws DegenerateMesh below 2 vertices or
// when the diameter collapses under 1e-9.
double diameter(const TriMesh& mesh);

struct ModelPoints {
  std::vector<Vec3> points;
  std::size_t count() const { return points.size(); }
};

enum class SampleMode { kAuto, kVertices, kSurface };

// Model point set for the distance metrics: all vertices when the mesh has
// at most m of them (kAuto), otherwise area-weighted uniform surface samples
// with barycentric coordinates. Deterministic per (mesh, m, seed).
ModelPoints sample_points(const TriMesh& mesh, std::size_t m, std::uint64_t seed,
                          SampleMode mode = SampleMode::kAuto);

// Deterministic farthest-point keypoint selection over the vertices; used as
// the canonical ordered 3D keypoints of an object. No RNG: the walk starts at
// the vertex farthest from the centroid, so the order is stable per mesh.
std::vector<Vec3> farthest_point_keypoints(const TriMesh& mesh, std::size_t k);

TriMesh transformed(const TriMesh& mesh, const Pose& pose);

}  // namespace posepoison
