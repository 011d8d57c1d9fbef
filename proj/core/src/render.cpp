#include "posepoison/render.hpp"

#include <algorithm>
#include <cmath>

namespace posepoison {

namespace {

constexpr double kNearPlane = 1e-6;  // meters

struct ClipVertex {
  Vec3 cam;   // camera-frame position
  Vec3 color;
};

// Screen-space vertex with attributes pre-divided for perspective correction.
struct ScreenVertex {
  double x, y;     // pixel coordinates
  double invz;     // 1/z
  Vec3 color_invz; // color * 1/z
};

double edge(double ax, double ay, double bx, double by, double px, double py) {
  return (bx - ax) * (py - ay) - (by - ay) * (px - ax);
}

// Top-left rule for the orientation where inside means edge >= 0 and y grows
// down: a "top" edge is horizontal pointing right, a "left" edge points up.
bool top_left(const ScreenVertex& a, const ScreenVertex& b) {
  if (a.y == b.y) return b.x > a.x;
  return b.y < a.y;
}

// Sutherland-Hodgman against z >= kNearPlane. Returns 0..4 vertices.
std::vector<ClipVertex> clip_near(const ClipVertex* tri) {
  std::vector<ClipVertex> out;
  for (int i = 0; i < 3; ++i) {
    const ClipVertex& cur = tri[i];
    const ClipVertex& nxt = tri[(i + 1) % 3];
    const bool cur_in = cur.cam.z() >= kNearPlane;
    const bool nxt_in = nxt.cam.z() >= kNearPlane;
    if (cur_in) out.push_back(cur);
    if (cur_in != nxt_in) {
      const double t = (kNearPlane - cur.cam.z()) / (nxt.cam.z() - cur.cam.z());
      out.push_back({cur.cam + t * (nxt.cam - cur.cam), cur.color + t * (nxt.color - cur.color)});
    }
  }
  return out;
}

void raster_triangle(const ScreenVertex& v0, ScreenVertex v1, ScreenVertex v2,
                     RenderFragment& frag) {
  double area = edge(v0.x, v0.y, v1.x, v1.y, v2.x, v2.y);
  if (area < 0.0) {
    std::swap(v1, v2);
    area = -area;
  }
  if (area < 1e-12) return;

  const int w = frag.width(), h = frag.height();
  const int min_x = std::max(0, static_cast<int>(std::floor(std::min({v0.x, v1.x, v2.x}) - 0.5)));
  const int max_x = std::min(w - 1, static_cast<int>(std::ceil(std::max({v0.x, v1.x, v2.x}))));
  const int min_y = std::max(0, static_cast<int>(std::floor(std::min({v0.y, v1.y, v2.y}) - 0.5)));
  const int max_y = std::min(h - 1, static_cast<int>(std::ceil(std::max({v0.y, v1.y, v2.y}))));

  const bool tl0 = top_left(v1, v2);
  const bool tl1 = top_left(v2, v0);
  const bool tl2 = top_left(v0, v1);

  for (int py = min_y; py <= max_y; ++py) {
    const double sy = py + 0.5;
    for (int px = min_x; px <= max_x; ++px) {
      const double sx = px + 0.5;
      const double w0 = edge(v1.x, v1.y, v2.x, v2.y, sx, sy);
      const double w1 = edge(v2.x, v2.y, v0.x, v0.y, sx, sy);
      const double w2 = edge(v0.x, v0.y, v1.x, v1.y, sx, sy);
      const bool in0 = w0 > 0.0 || (w0 == 0.0 && tl0);
      const bool in1 = w1 > 0.0 || (w1 == 0.0 && tl1);
      const bool in2 = w2 > 0.0 || (w2 == 0.0 && tl2);
      if (!(in0 && in1 && in2)) continue;

      const double l0 = w0 / area, l1 = w1 / area, l2 = w2 / area;
      const double invz = l0 * v0.invz + l1 * v1.invz + l2 * v2.invz;
      if (invz <= 0.0) continue;
      const double z = 1.0 / invz;

      const float prev = frag.depth.at(px, py);
      if (prev > 0.0f && static_cast<float>(z) >= prev) continue;

      const Vec3 c = (l0 * v0.color_invz + l1 * v1.color_invz + l2 * v2.color_invz) * z;
      frag.depth.at(px, py) = static_cast<float>(z);
      auto* rgb = frag.color.at(px, py);
      for (int i = 0; i < 3; ++i)
        rgb[i] = static_cast<std::uint8_t>(std::lround(std::clamp(c[i], 0.0, 1.0) * 255.0));
      frag.mask[static_cast<std::size_t>(py) * static_cast<std::size_t>(w) +
                static_cast<std::size_t>(px)] = 1;
    }
  }
}

}  // namespace

RenderFragment rasterize(const TriMesh& mesh, const Pose& pose, const CameraIntrinsics& k,
                         int width, int height) {
  if (width <= 0 || height <= 0) throw DimensionMismatch("non-positive render size");
  k.validate();
  mesh.validate();

  RenderFragment frag;
  frag.depth = DepthMap(width, height, 0.0f);
  frag.color = RgbImage(width, height, {0, 0, 0});
  frag.mask.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0);

  const Vec3 gray(128.0 / 255.0, 128.0 / 255.0, 128.0 / 255.0);
  std::vector<Vec3> cam(mesh.vertices.size());
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i)
    cam[i] = transform_point(pose, mesh.vertices[i]);

  for (const auto& tri : mesh.triangles) {
    ClipVertex cv[3];
    for (int i = 0; i < 3; ++i) {
      const auto vi = static_cast<std::size_t>(tri[static_cast<std::size_t>(i)]);
      cv[i].cam = cam[vi];
      cv[i].color = mesh.has_colors() ? mesh.colors[vi] : gray;
    }
    const auto poly = clip_near(cv);
    if (poly.size() < 3) continue;

    auto to_screen = [&](const ClipVertex& v) {
      const double invz = 1.0 / v.cam.z();
      return ScreenVertex{k.fx * v.cam.x() * invz + k.cx, k.fy * v.cam.y() * invz + k.cy, invz,
                          v.color * invz};
    };
    const ScreenVertex s0 = to_screen(poly[0]);
    for (std::size_t i = 1; i + 1 < poly.size(); ++i)
      raster_triangle(s0, to_screen(poly[i]), to_screen(poly[i + 1]), frag);
  }

  if (std::none_of(frag.mask.begin(), frag.mask.end(), [](std::uint8_t m) { return m != 0; }))
    throw EmptyRender();
  return frag;
}

std::pair<RgbImage, DepthMap> composite(const RgbImage& scene_rgb, const DepthMap& scene_depth,
                                        const RenderFragment& frag) {
  if (scene_rgb.width != scene_depth.width || scene_rgb.height != scene_depth.height ||
      scene_rgb.width != frag.width() || scene_rgb.height != frag.height())
    throw DimensionMismatch("composite inputs disagree on size");

  RgbImage rgb = scene_rgb;
  DepthMap depth = scene_depth;
  for (int y = 0; y < depth.height; ++y) {
    for (int x = 0; x < depth.width; ++x) {
      if (!frag.covered(x, y)) continue;
      const float fz = frag.depth.at(x, y);
      const float sz = depth.at(x, y);
      if (sz == 0.0f || fz < sz) {
        depth.at(x, y) = fz;
        const auto* src = frag.color.at(x, y);
        auto* dst = rgb.at(x, y);
        dst[0] = src[0];
        dst[1] = src[1];
        dst[2] = src[2];
      }
    }
  }
  return {std::move(rgb), std::move(depth)};
}

double visible_fraction(const RenderFragment& frag, const DepthMap& scene_depth) {
  if (frag.width() != scene_depth.width || frag.height() != scene_depth.height)
    throw DimensionMismatch("visible_fraction inputs disagree on size");
  std::size_t covered = 0, visible = 0;
  for (int y = 0; y < scene_depth.height; ++y) {
    for (int x = 0; x < scene_depth.width; ++x) {
      if (!frag.covered(x, y)) continue;
      ++covered;
      const float sz = scene_depth.at(x, y);
      if (sz == 0.0f || frag.depth.at(x, y) < sz) ++visible;
    }
  }
  return covered == 0 ? 0.0 : static_cast<double>(visible) / static_cast<double>(covered);
}

}  // namespace posepoison
