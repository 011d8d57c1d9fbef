#pragma once

#include <utility>
#include <vector>

#include "posepoison/geometry.hpp"
#include "posepoison/image.hpp"
#include "posepoison/mesh.hpp"

namespace posepoison {

// Output of one rasterization: depth (0 where uncovered), color, and the
// coverage mask. mask[i] != 0 exactly where depth > 0.
struct RenderFragment {
  DepthMap depth;
  RgbImage color;
  std::vector<std::uint8_t> mask;

  bool covered(int x, int y) const {
    return mask[static_cast<std::size_t>(y) * static_cast<std::size_t>(width()) +
                static_cast<std::size_t>(x)] != 0;
  }
  int width() const { return depth.width; }
  int height() const { return depth.height; }
};

// Edge-function triangle rasterization with the top-left fill rule.
// Depth is perspective-correct (1/z interpolated in screen space, inverted);
// color is barycentric-interpolated vertex color, flat gray (128,128,128)
// when the mesh carries none. Nearest fragment wins per pixel. Triangles are
// clipped against a small positive near plane before projection.
// Throws EmptyRender when zero pixels end up covered.
RenderFragment rasterize(const TriMesh& mesh, const Pose& pose, const CameraIntrinsics& k,
                         int width, int height);

// Z-tested write of a fragment over a scene. Per covered pixel: the fragment
// wins when its depth is nearer than the scene's, or where the scene has no
// measurement (depth 0 is treated as free space). Losing or uncovered pixels
// stay untouched bytewise.
std::pair<RgbImage, DepthMap> composite(const RgbImage& scene_rgb, const DepthMap& scene_depth,
                                        const RenderFragment& frag);

// Covered pixels that would survive the composite z-test, over all covered
// pixels. 0 for an empty fragment.
double visible_fraction(const RenderFragment& frag, const DepthMap& scene_depth);

}  // namespace posepoison
