#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "posepoison/geometry.hpp"

namespace posepoison {

// Per-pixel unit vectors pointing at each 2D keypoint from inside the object
// region. A masked pixel exactly at a keypoint stores (0,0) and is flagged
// degenerate. Pixel positions are cell centers (x+0.5, y+0.5).
struct VectorField {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> mask;            // row-major object region
  std::vector<std::vector<Vec2>> vectors;    // [keypoint][pixel]

  std::size_t pixel_index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
           static_cast<std::size_t>(x);
  }
  bool masked(int x, int y) const { return mask[pixel_index(x, y)] != 0; }
  std::size_t keypoint_count() const { return vectors.size(); }
};

struct KeypointEstimate {
  std::vector<Vec2> keypoints;               // canonical object order
  std::vector<int> inlier_counts;
  std::vector<Eigen::Matrix2d> spreads;      // perpendicular-residual covariance, px^2
};

struct SolverSettings {
  int ransac_hypotheses = 128;
  double inlier_cos_threshold = 0.99;
  int gn_max_iters = 30;
  double gn_tol = 1e-10;  // on squared-residual decrease
  std::uint64_t seed = 0;
};

// Builds the field with v_k(p) = (C_k - p) / ||C_k - p|| at every masked pixel.
VectorField build_vector_field(const std::vector<std::uint8_t>& mask, int width, int height,
                               const std::vector<Vec2>& keypoints);

// RANSAC voting: hypotheses are ray intersections of seeded random pixel
// pairs; a pixel is an inlier when the cosine between its vector and the
// direction to the hypothesis reaches inlier_cos_threshold. The winner's
// inlier rays are intersected in least squares for the final keypoint.
// Deterministic per settings.seed.
KeypointEstimate vote_keypoints(const VectorField& field, const SolverSettings& settings);

struct PnpReport {
  Pose pose;
  double initial_residual = 0.0;  // squared px residual after DLT
  double final_residual = 0.0;
  int iterations = 0;
  std::vector<double> residual_history;  // squared residual per accepted iterate
};

// DLT on normalized coordinates (rotation re-projected to SO(3) by orthogonal
// Procrustes) followed by Gauss-Newton on the reprojection error over a
// 6-dim tangent parameterization, with step halving on residual increase.
// Needs >= 6 correspondences, or >= 4 when `initial` seeds refinement only.
Pose solve_pnp(const std::vector<Vec2>& kp2d, const std::vector<Vec3>& kp3d,
               const CameraIntrinsics& k, const SolverSettings& settings,
               const Pose* initial = nullptr);

PnpReport solve_pnp_detailed(const std::vector<Vec2>& kp2d, const std::vector<Vec3>& kp3d,
                             const CameraIntrinsics& k, const SolverSettings& settings,
                             const Pose* initial = nullptr);

// vote_keypoints then solve_pnp.
std::pair<Pose, KeypointEstimate> recover_pose_from_field(const VectorField& field,
                                                          const std::vector<Vec3>& kp3d,
                                                          const CameraIntrinsics& k,
                                                          const SolverSettings& settings);

}  // namespace posepoison
