#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "posepoison/geometry.hpp"
#include "posepoison/mesh.hpp"
#include "posepoison/rng.hpp"

namespace posepoison::testing {

// Scratch directory removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("posepoison-" + tag + "-" + std::to_string(++counter) + "-" +
             std::to_string(static_cast<unsigned>(::getpid())));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline Pose transl(double x, double y, double z) { return Pose(Rotation(), Vec3(x, y, z)); }

inline Pose rot_z(double deg) {
  return Pose(Rotation::from_axis_angle(Vec3(0, 0, deg2rad(deg))), Vec3::Zero());
}

inline Pose random_pose(Rng& rng, double z_lo = 0.5, double z_hi = 3.0) {
  return Pose(Rotation::random(rng),
              Vec3(rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), rng.uniform(z_lo, z_hi)));
}

// Axis-aligned cube centered at the origin.
inline TriMesh make_cube(double side = 0.1, bool colored = false) {
  TriMesh mesh;
  const double h = side / 2.0;
  for (int i = 0; i < 8; ++i)
    mesh.vertices.emplace_back((i & 1) ? h : -h, (i & 2) ? h : -h, (i & 4) ? h : -h);
  // 12 triangles, outward order not required by the renderer
  const int faces[12][3] = {{0, 1, 3}, {0, 3, 2}, {4, 6, 7}, {4, 7, 5}, {0, 4, 5}, {0, 5, 1},
                            {2, 3, 7}, {2, 7, 6}, {0, 2, 6}, {0, 6, 4}, {1, 5, 7}, {1, 7, 3}};
  for (const auto& f : faces) mesh.triangles.push_back({f[0], f[1], f[2]});
  if (colored) {
    for (int i = 0; i < 8; ++i)
      mesh.colors.emplace_back((i & 1) ? 1.0 : 0.1, (i & 2) ? 1.0 : 0.1, (i & 4) ? 1.0 : 0.1);
  }
  return mesh;
}

// Fronto-parallel square (zero thickness) in the z=0 object plane.
inline TriMesh make_quad(double side = 0.2) {
  TriMesh mesh;
  const double h = side / 2.0;
  mesh.vertices = {{-h, -h, 0.0}, {h, -h, 0.0}, {h, h, 0.0}, {-h, h, 0.0}};
  mesh.triangles = {{0, 1, 2}, {0, 2, 3}};
  return mesh;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

inline std::string cube_obj_text(double side = 0.1) {
  const TriMesh cube = make_cube(side);
  std::string text;
  for (const auto& v : cube.vertices) {
    text += "v " + std::to_string(v.x()) + " " + std::to_string(v.y()) + " " +
            std::to_string(v.z()) + "\n";
  }
  for (const auto& t : cube.triangles) {
    text += "f " + std::to_string(t[0] + 1) + " " + std::to_string(t[1] + 1) + " " +
            std::to_string(t[2] + 1) + "\n";
  }
  return text;
}

inline bool files_equal(const std::filesystem::path& a, const std::filesystem::path& b) {
  std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
  if (!fa || !fb) return false;
  const std::string da((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
  const std::string db((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
  return da == db;
}

}  // namespace posepoison::testing
