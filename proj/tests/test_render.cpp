#include <doctest.h>

#include <set>

#include "helpers.hpp"
#include "posepoison/render.hpp"
#include "posepoison/rng.hpp"

using namespace posepoison;
using namespace posepoison::testing;

namespace {

const CameraIntrinsics kSmallK{100, 100, 40, 30};
constexpr int kW = 80, kH = 60;

std::size_t coverage(const RenderFragment& frag) {
  std::size_t n = 0;
  for (auto m : frag.mask) n += m != 0;
  return n;
}

TriMesh camera_frame_triangle(const Vec3& a, const Vec3& b, const Vec3& c) {
  TriMesh mesh;
  mesh.vertices = {a, b, c};
  mesh.triangles = {{0, 1, 2}};
  return mesh;
}

}  // namespace

TEST_CASE("fronto-parallel triangle has constant exact depth") {
  const CameraIntrinsics k{500, 500, 320, 240};
  const TriMesh tri =
      camera_frame_triangle(Vec3(-1, -1, 0), Vec3(1, -1, 0), Vec3(0, 1, 0));
  const RenderFragment frag = rasterize(tri, Pose(Rotation(), Vec3(0, 0, 2)), k, 640, 480);
  REQUIRE(frag.covered(320, 240));
  CHECK(frag.depth.at(320, 240) == 2.0f);
}

TEST_CASE("mesh behind the camera raises EmptyRender") {
  const TriMesh cube = make_cube(0.1);
  CHECK_THROWS_AS(rasterize(cube, Pose(Rotation(), Vec3(0, 0, -2)), kSmallK, kW, kH),
                  EmptyRender);
}

TEST_CASE("z-buffer keeps the nearest of two overlapping triangles") {
  TriMesh mesh;
  mesh.vertices = {{-1, -1, 2}, {1, -1, 2}, {0, 1, 2}, {-1, -1, 1}, {1, -1, 1}, {0, 1, 1}};
  mesh.triangles = {{0, 1, 2}, {3, 4, 5}};
  const RenderFragment frag = rasterize(mesh, Pose(), kSmallK, kW, kH);
  REQUIRE(frag.covered(40, 30));
  CHECK(frag.depth.at(40, 30) == 1.0f);
}

TEST_CASE("sub-pixel triangle that misses every center raises EmptyRender") {
  // straddles the corner (40.0, 30.0), far from any (x+0.5, y+0.5) center
  const TriMesh tri = camera_frame_triangle(Vec3(-0.001, -0.001, 0), Vec3(0.001, -0.001, 0),
                                            Vec3(0.0, 0.001, 0));
  CHECK_THROWS_AS(rasterize(tri, Pose(Rotation(), Vec3(0, 0, 1)), kSmallK, kW, kH), EmptyRender);
}

TEST_CASE("perspective-correct depth matches the analytic ray-plane intersection") {
  // slanted quad: camera-frame plane z = 1 + 0.8 x
  TriMesh mesh;
  mesh.vertices = {{-0.4, -0.4, 1 - 0.32}, {0.4, -0.4, 1 + 0.32}, {0.4, 0.4, 1 + 0.32},
                   {-0.4, 0.4, 1 - 0.32}};
  mesh.triangles = {{0, 1, 2}, {0, 2, 3}};
  const RenderFragment frag = rasterize(mesh, Pose(), kSmallK, kW, kH);
  const Vec3 n = (mesh.vertices[1] - mesh.vertices[0]).cross(mesh.vertices[2] - mesh.vertices[0]);
  const double c = n.dot(mesh.vertices[0]);
  std::size_t checked = 0;
  for (int y = 0; y < kH; y += 7) {
    for (int x = 0; x < kW; x += 7) {
      if (!frag.covered(x, y)) continue;
      const Vec3 dir((x + 0.5 - kSmallK.cx) / kSmallK.fx, (y + 0.5 - kSmallK.cy) / kSmallK.fy, 1.0);
      const double analytic = c / n.dot(dir);  // depth = z of the ray-plane hit
      CHECK(frag.depth.at(x, y) == doctest::Approx(analytic).epsilon(1e-6));
      ++checked;
    }
  }
  CHECK(checked > 10);
}

TEST_CASE("shared edge pixels are covered exactly once") {
  // quad projecting to pixel rect [20,40)x[10,30); the diagonal runs through
  // twenty pixel centers, so the fill rule decides their owner
  const Vec3 c0(-0.2, -0.2, 1), c1(0.0, -0.2, 1), c2(0.0, 0.0, 1), c3(-0.2, 0.0, 1);
  const RenderFragment a = rasterize(camera_frame_triangle(c0, c1, c2), Pose(), kSmallK, kW, kH);
  const RenderFragment b = rasterize(camera_frame_triangle(c0, c2, c3), Pose(), kSmallK, kW, kH);
  CHECK(coverage(a) + coverage(b) == 400);
  std::size_t unioned = 0;
  for (std::size_t i = 0; i < a.mask.size(); ++i) {
    CHECK((a.mask[i] && b.mask[i]) == false);
    unioned += (a.mask[i] || b.mask[i]) ? 1 : 0;
  }
  CHECK(unioned == 400);
}

TEST_CASE("flat gray when the mesh has no colors, interpolated otherwise") {
  const TriMesh plain = make_cube(0.2);
  const RenderFragment frag = rasterize(plain, Pose(Rotation(), Vec3(0, 0, 1)), kSmallK, kW, kH);
  for (int y = 0; y < kH; ++y)
    for (int x = 0; x < kW; ++x)
      if (frag.covered(x, y)) {
        CHECK(frag.color.at(x, y)[0] == 128);
        CHECK(frag.color.at(x, y)[1] == 128);
        CHECK(frag.color.at(x, y)[2] == 128);
      }

  const TriMesh colored = make_cube(0.2, true);
  const RenderFragment cfrag =
      rasterize(colored, Pose(Rotation(), Vec3(0, 0, 1)), kSmallK, kW, kH);
  std::set<int> reds;
  for (int y = 0; y < kH; ++y)
    for (int x = 0; x < kW; ++x)
      if (cfrag.covered(x, y)) reds.insert(cfrag.color.at(x, y)[0]);
  CHECK(reds.size() > 3);  // interpolation produces in-between values
}

TEST_CASE("mask is set exactly where depth is positive") {
  Rng rng(5);
  for (int i = 0; i < 10; ++i) {
    const Pose pose(Rotation::random(rng), Vec3(rng.uniform(-0.2, 0.2), rng.uniform(-0.15, 0.15),
                                                rng.uniform(0.6, 1.4)));
    const RenderFragment frag = rasterize(make_cube(0.12), pose, kSmallK, kW, kH);
    for (int y = 0; y < kH; ++y)
      for (int x = 0; x < kW; ++x)
        CHECK(frag.covered(x, y) == (frag.depth.at(x, y) > 0.0f));
  }
}

TEST_CASE("rasterization is deterministic") {
  Rng rng(6);
  const Pose pose(Rotation::random(rng), Vec3(0.05, -0.02, 1.1));
  const RenderFragment a = rasterize(make_cube(0.15, true), pose, kSmallK, kW, kH);
  const RenderFragment b = rasterize(make_cube(0.15, true), pose, kSmallK, kW, kH);
  CHECK(a.depth.data == b.depth.data);
  CHECK(a.color.data == b.color.data);
  CHECK(a.mask == b.mask);
}

TEST_CASE("moving a centered convex mesh away covers a pixel subset") {
  const TriMesh cube = make_cube(0.11);
  const RenderFragment near_frag =
      rasterize(cube, Pose(Rotation(), Vec3(0, 0, 1.0)), kSmallK, kW, kH);
  const RenderFragment far_frag =
      rasterize(cube, Pose(Rotation(), Vec3(0, 0, 1.5)), kSmallK, kW, kH);
  for (std::size_t i = 0; i < far_frag.mask.size(); ++i)
    if (far_frag.mask[i]) CHECK(near_frag.mask[i]);
}

TEST_CASE("composite z-test rules") {
  RgbImage scene_rgb(kW, kH, {10, 20, 30});
  const RenderFragment frag =
      rasterize(make_quad(0.3), Pose(Rotation(), Vec3(0, 0, 1)), kSmallK, kW, kH);
  REQUIRE(coverage(frag) > 0);

  SUBCASE("nearer trigger replaces the scene") {
    DepthMap scene_depth(kW, kH, 2.0f);
    const auto [rgb, depth] = composite(scene_rgb, scene_depth, frag);
    for (int y = 0; y < kH; ++y)
      for (int x = 0; x < kW; ++x)
        if (frag.covered(x, y)) {
          CHECK(depth.at(x, y) == 1.0f);
          CHECK(rgb.at(x, y)[0] == 128);
        }
  }
  SUBCASE("occluded trigger leaves pixels untouched") {
    DepthMap scene_depth(kW, kH, 0.5f);
    const auto [rgb, depth] = composite(scene_rgb, scene_depth, frag);
    CHECK(rgb.data == scene_rgb.data);
    CHECK(depth.data == scene_depth.data);
  }
  SUBCASE("missing scene measurement counts as free space") {
    DepthMap scene_depth(kW, kH, 0.0f);
    const auto [rgb, depth] = composite(scene_rgb, scene_depth, frag);
    for (int y = 0; y < kH; ++y)
      for (int x = 0; x < kW; ++x)
        if (frag.covered(x, y)) CHECK(depth.at(x, y) == 1.0f);
  }
  SUBCASE("dimension mismatch") {
    DepthMap wrong(kW / 2, kH, 1.0f);
    CHECK_THROWS_AS(composite(scene_rgb, wrong, frag), DimensionMismatch);
    RgbImage wrong_rgb(kW, kH / 2);
    DepthMap scene_depth(kW, kH, 1.0f);
    CHECK_THROWS_AS(composite(wrong_rgb, scene_depth, frag), DimensionMismatch);
  }
}

TEST_CASE("composite never raises a valid depth and keeps rgb/depth in sync") {
  Rng rng(77);
  for (int i = 0; i < 20; ++i) {
    // scene with random valid depths and some holes
    RgbImage scene_rgb(kW, kH);
    DepthMap scene_depth(kW, kH);
    for (int y = 0; y < kH; ++y)
      for (int x = 0; x < kW; ++x) {
        scene_depth.at(x, y) = rng.uniform() < 0.15 ? 0.0f
                                                    : static_cast<float>(rng.uniform(0.4, 3.0));
        scene_rgb.at(x, y)[2] = 200;  // solid blue so trigger gray always differs
      }
    const Pose pose(Rotation::random(rng), Vec3(rng.uniform(-0.2, 0.2), rng.uniform(-0.15, 0.15),
                                                rng.uniform(0.5, 2.0)));
    RenderFragment frag;
    try {
      frag = rasterize(make_cube(0.1), pose, kSmallK, kW, kH);
    } catch (const EmptyRender&) {
      continue;
    }
    const auto [rgb, depth] = composite(scene_rgb, scene_depth, frag);
    for (int y = 0; y < kH; ++y)
      for (int x = 0; x < kW; ++x) {
        const float before = scene_depth.at(x, y);
        const float after = depth.at(x, y);
        if (before > 0.0f) CHECK(after <= before);
        const bool rgb_changed = std::memcmp(rgb.at(x, y), scene_rgb.at(x, y), 3) != 0;
        const bool depth_changed = after != before;
        CHECK(rgb_changed == depth_changed);
      }
  }
}

TEST_CASE("visible_fraction extremes and recount oracle") {
  const RenderFragment frag =
      rasterize(make_quad(0.3), Pose(Rotation(), Vec3(0, 0, 1)), kSmallK, kW, kH);

  DepthMap open_scene(kW, kH, 0.0f);
  CHECK(visible_fraction(frag, open_scene) == 1.0);

  DepthMap wall_in_front(kW, kH, 0.2f);
  CHECK(visible_fraction(frag, wall_in_front) == 0.0);

  // half-occluding wall: left half of the image at 0.5 m, right half at 3 m
  DepthMap half(kW, kH);
  for (int y = 0; y < kH; ++y)
    for (int x = 0; x < kW; ++x) half.at(x, y) = x < kW / 2 ? 0.5f : 3.0f;
  const double got = visible_fraction(frag, half);
  std::size_t covered = 0, vis = 0;
  for (int y = 0; y < kH; ++y)
    for (int x = 0; x < kW; ++x) {
      if (!frag.covered(x, y)) continue;
      ++covered;
      if (half.at(x, y) == 0.0f || frag.depth.at(x, y) < half.at(x, y)) ++vis;
    }
  CHECK(got == doctest::Approx(static_cast<double>(vis) / static_cast<double>(covered)));
  CHECK(got > 0.0);
  CHECK(got < 1.0);

  DepthMap wrong(kW + 1, kH);
  CHECK_THROWS_AS(visible_fraction(frag, wrong), DimensionMismatch);
}
