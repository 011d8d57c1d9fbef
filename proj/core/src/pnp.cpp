#include "posepoison/pnp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "posepoison/rng.hpp"

namespace posepoison {

namespace {

constexpr double kDegenerateNorm = 1e-12;

struct Ray {
  Vec2 origin;
  Vec2 dir;  // unit
};

// Intersection of two 2D lines through the ray origins; false when parallel.
bool intersect(const Ray& a, const Ray& b, Vec2& out) {
  const double cross = a.dir.x() * b.dir.y() - a.dir.y() * b.dir.x();
  if (std::abs(cross) < 1e-12) return false;
  const Vec2 d = b.origin - a.origin;
  const double s = (d.x() * b.dir.y() - d.y() * b.dir.x()) / cross;
  out = a.origin + s * a.dir;
  return true;
}

bool is_inlier(const Ray& ray, const Vec2& candidate, double cos_threshold) {
  const Vec2 to = candidate - ray.origin;
  const double norm = to.norm();
  if (norm < kDegenerateNorm) return true;  // hypothesis sits on the pixel
  return ray.dir.dot(to) / norm >= cos_threshold;
}

Eigen::Matrix<double, 3, 4> camera_matrix(const CameraIntrinsics& k) {
  Eigen::Matrix<double, 3, 4> m = Eigen::Matrix<double, 3, 4>::Zero();
  m(0, 0) = k.fx;
  m(1, 1) = k.fy;
  m(0, 2) = k.cx;
  m(1, 2) = k.cy;
  m(2, 2) = 1.0;
  return m;
}

// Hartley-normalized DLT estimate of [R|t] from >= 6 correspondences.
Pose dlt_initialize(const std::vector<Vec2>& kp2d, const std::vector<Vec3>& kp3d,
                    const CameraIntrinsics& k) {
  const std::size_t n = kp2d.size();

  // Coplanar or collinear 3D sets make the 12-parameter DLT rank-deficient.
  Vec3 mean3 = Vec3::Zero();
  for (const auto& x : kp3d) mean3 += x;
  mean3 /= static_cast<double>(n);
  Mat3 cov = Mat3::Zero();
  for (const auto& x : kp3d) cov += (x - mean3) * (x - mean3).transpose();
  const Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  if (eig.eigenvalues()(0) < 1e-10 * std::max(eig.eigenvalues()(2), 1e-300))
    throw DegenerateConfiguration("3D keypoints are coplanar or collinear");

  Vec2 mean2 = Vec2::Zero();
  for (const auto& x : kp2d) mean2 += x;
  mean2 /= static_cast<double>(n);
  double scale2 = 0.0, scale3 = 0.0;
  for (const auto& x : kp2d) scale2 += (x - mean2).norm();
  for (const auto& x : kp3d) scale3 += (x - mean3).norm();
  scale2 = std::sqrt(2.0) * static_cast<double>(n) / std::max(scale2, 1e-300);
  scale3 = std::sqrt(3.0) * static_cast<double>(n) / std::max(scale3, 1e-300);

  Eigen::MatrixXd a(2 * n, 12);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 x = (kp2d[i] - mean2) * scale2;
    const Vec3 p = (kp3d[i] - mean3) * scale3;
    const Eigen::Vector4d ph(p.x(), p.y(), p.z(), 1.0);
    a.row(static_cast<Eigen::Index>(2 * i)) << ph.transpose(), Eigen::RowVector4d::Zero(),
        -x.x() * ph.transpose();
    a.row(static_cast<Eigen::Index>(2 * i + 1)) << Eigen::RowVector4d::Zero(), ph.transpose(),
        -x.y() * ph.transpose();
  }

  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv(10) < 1e-10 * std::max(sv(0), 1e-300))
    throw DegenerateConfiguration("DLT system is rank deficient");
  const Eigen::VectorXd h = svd.matrixV().col(11);

  Eigen::Matrix<double, 3, 4> pn;
  pn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8), h(9), h(10), h(11);

  // Undo both normalizations: P = T2^-1 * Pn * T3.
  Mat3 t2inv = Mat3::Identity();
  t2inv(0, 0) = 1.0 / scale2;
  t2inv(1, 1) = 1.0 / scale2;
  t2inv(0, 2) = mean2.x();
  t2inv(1, 2) = mean2.y();
  Eigen::Matrix4d t3 = Eigen::Matrix4d::Identity() * scale3;
  t3(3, 3) = 1.0;
  t3.block<3, 1>(0, 3) = -scale3 * mean3;
  Eigen::Matrix<double, 3, 4> proj = t2inv * pn * t3;

  // Peel off the intrinsics and fix the projective scale so the rotation part
  // has unit-norm rows; the sign is set by requiring positive depths.
  Mat3 kinv = Mat3::Identity();
  kinv(0, 0) = 1.0 / k.fx;
  kinv(1, 1) = 1.0 / k.fy;
  kinv(0, 2) = -k.cx / k.fx;
  kinv(1, 2) = -k.cy / k.fy;
  Eigen::Matrix<double, 3, 4> m = kinv * proj;
  const double row_norm = m.block<3, 3>(0, 0).row(2).norm();
  if (row_norm < 1e-12) throw DegenerateConfiguration("DLT produced a singular pose");
  m /= row_norm;

  int positive = 0;
  for (const auto& x : kp3d) {
    const double z = m.row(2).head<3>().dot(x) + m(2, 3);
    if (z > 0.0) ++positive;
  }
  if (2 * positive < static_cast<int>(n)) m = -m;

  return Pose(Rotation::projected(m.block<3, 3>(0, 0)), m.col(3));
}

Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return s;
}

// Squared reprojection residual; false when any point lands at non-positive depth.
bool squared_residual(const std::vector<Vec2>& kp2d, const std::vector<Vec3>& kp3d,
                      const CameraIntrinsics& k, const Pose& pose, double& out) {
  double sum = 0.0;
  for (std::size_t i = 0; i < kp2d.size(); ++i) {
    const Vec3 y = transform_point(pose, kp3d[i]);
    if (y.z() <= kMinProjectionDepth) return false;
    const Vec2 p(k.fx * y.x() / y.z() + k.cx, k.fy * y.y() / y.z() + k.cy);
    sum += (p - kp2d[i]).squaredNorm();
  }
  out = sum;
  return true;
}

}  // namespace

VectorField build_vector_field(const std::vector<std::uint8_t>& mask, int width, int height,
                               const std::vector<Vec2>& keypoints) {
  if (width <= 0 || height <= 0 ||
      mask.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
    throw DimensionMismatch("mask size does not match width*height");
  for (const auto& c : keypoints)
    if (!c.allFinite()) throw Error("non-finite keypoint");

  VectorField field;
  field.width = width;
  field.height = height;
  field.mask = mask;
  if (std::none_of(mask.begin(), mask.end(), [](std::uint8_t m) { return m != 0; }))
    throw EmptyMask();

  field.vectors.resize(keypoints.size());
  for (std::size_t ki = 0; ki < keypoints.size(); ++ki) {
    auto& layer = field.vectors[ki];
    layer.assign(mask.size(), Vec2::Zero());
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const std::size_t idx = field.pixel_index(x, y);
        if (!mask[idx]) continue;
        const Vec2 p(x + 0.5, y + 0.5);
        const Vec2 d = keypoints[ki] - p;
        const double norm = d.norm();
        // pixel exactly at the keypoint: degenerate, stays (0,0)
        if (norm >= kDegenerateNorm) layer[idx] = d / norm;
      }
    }
  }
  return field;
}

KeypointEstimate vote_keypoints(const VectorField& field, const SolverSettings& settings) {
  if (settings.ransac_hypotheses < 1) throw Error("ransac_hypotheses must be >= 1");
  if (!(settings.inlier_cos_threshold > 0.0 && settings.inlier_cos_threshold <= 1.0))
    throw Error("inlier_cos_threshold must lie in (0, 1]");

  KeypointEstimate est;
  for (std::size_t ki = 0; ki < field.keypoint_count(); ++ki) {
    std::vector<Ray> rays;
    for (int y = 0; y < field.height; ++y) {
      for (int x = 0; x < field.width; ++x) {
        const std::size_t idx = field.pixel_index(x, y);
        if (!field.mask[idx]) continue;
        const Vec2& v = field.vectors[ki][idx];
        if (v.squaredNorm() < kDegenerateNorm) continue;  // degenerate pixel
        rays.push_back({Vec2(x + 0.5, y + 0.5), v});
      }
    }
    if (rays.size() < 2)
      throw TooFewPixels("keypoint " + std::to_string(ki) + " has " +
                         std::to_string(rays.size()) + " usable pixels");

    Rng rng(derive_seed(settings.seed, "vote-keypoints", ki));
    Vec2 best_hypo = Vec2::Zero();
    int best_inliers = -1;
    const long max_attempts = static_cast<long>(settings.ransac_hypotheses) * 20;
    int produced = 0;
    for (long attempt = 0; attempt < max_attempts && produced < settings.ransac_hypotheses;
         ++attempt) {
      const std::size_t ia = rng.below(rays.size());
      std::size_t ib = rng.below(rays.size() - 1);
      if (ib >= ia) ++ib;
      Vec2 hypo;
      if (!intersect(rays[ia], rays[ib], hypo)) continue;
      ++produced;
      int inliers = 0;
      for (const auto& ray : rays)
        if (is_inlier(ray, hypo, settings.inlier_cos_threshold)) ++inliers;
      if (inliers > best_inliers) {
        best_inliers = inliers;
        best_hypo = hypo;
      }
    }
    if (best_inliers < 0) throw NoConsensus("all sampled pixel pairs were parallel");
    if (static_cast<double>(best_inliers) < 0.1 * static_cast<double>(rays.size()))
      throw NoConsensus("best hypothesis holds " + std::to_string(best_inliers) + " of " +
                        std::to_string(rays.size()) + " rays");

    // Least-squares intersection of the winner's inlier rays:
    // minimize sum ||(I - d d^T)(x - p)||^2.
    Eigen::Matrix2d a = Eigen::Matrix2d::Zero();
    Vec2 b = Vec2::Zero();
    std::vector<const Ray*> inlier_rays;
    for (const auto& ray : rays) {
      if (!is_inlier(ray, best_hypo, settings.inlier_cos_threshold)) continue;
      inlier_rays.push_back(&ray);
      const Eigen::Matrix2d proj =
          Eigen::Matrix2d::Identity() - ray.dir * ray.dir.transpose();
      a += proj;
      b += proj * ray.origin;
    }
    if (std::abs(a.determinant()) < 1e-12)
      throw NoConsensus("inlier rays are collectively parallel");
    const Vec2 kp = a.ldlt().solve(b);

    Eigen::Matrix2d spread = Eigen::Matrix2d::Zero();
    for (const Ray* ray : inlier_rays) {
      const Eigen::Matrix2d proj =
          Eigen::Matrix2d::Identity() - ray->dir * ray->dir.transpose();
      const Vec2 r = proj * (kp - ray->origin);
      spread += r * r.transpose();
    }
    spread /= static_cast<double>(std::max<std::size_t>(inlier_rays.size() - 1, 1));

    est.keypoints.push_back(kp);
    est.inlier_counts.push_back(static_cast<int>(inlier_rays.size()));
    est.spreads.push_back(spread);
  }
  return est;
}

PnpReport solve_pnp_detailed(const std::vector<Vec2>& kp2d, const std::vector<Vec3>& kp3d,
                             const CameraIntrinsics& k, const SolverSettings& settings,
                             const Pose* initial) {
  if (kp2d.size() != kp3d.size())
    throw DegenerateConfiguration("2D and 3D keypoint counts differ");
  const std::size_t n = kp2d.size();
  if (initial == nullptr && n < 6)
    throw DegenerateConfiguration("DLT initialization needs >= 6 correspondences, got " +
                                  std::to_string(n));
  if (initial != nullptr && n < 4)
    throw DegenerateConfiguration("refinement needs >= 4 correspondences, got " +
                                  std::to_string(n));
  k.validate();

  PnpReport report;
  Pose pose = initial ? *initial : dlt_initialize(kp2d, kp3d, k);

  double residual;
  if (!squared_residual(kp2d, kp3d, k, pose, residual))
    throw NonPositiveDepth(0.0);
  report.initial_residual = residual;
  report.residual_history.push_back(residual);

  for (int iter = 0; iter < settings.gn_max_iters; ++iter) {
    Eigen::Matrix<double, 6, 6> h = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> g = Eigen::Matrix<double, 6, 1>::Zero();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3 y = transform_point(pose, kp3d[i]);
      const double iz = 1.0 / y.z();
      const Vec2 p(k.fx * y.x() * iz + k.cx, k.fy * y.y() * iz + k.cy);
      const Vec2 r = p - kp2d[i];
      Eigen::Matrix<double, 2, 3> dp_dy;
      dp_dy << k.fx * iz, 0.0, -k.fx * y.x() * iz * iz, 0.0, k.fy * iz, -k.fy * y.y() * iz * iz;
      Eigen::Matrix<double, 3, 6> dy;  // theta = (omega, dt); R <- exp(omega) R
      dy.block<3, 3>(0, 0) = -skew(pose.rotation * kp3d[i]);
      dy.block<3, 3>(0, 3) = Mat3::Identity();
      const Eigen::Matrix<double, 2, 6> j = dp_dy * dy;
      h += j.transpose() * j;
      g += j.transpose() * r;
    }

    const Eigen::Matrix<double, 6, 1> step = h.ldlt().solve(-g);
    if (!step.allFinite()) break;

    // Halve the step until the residual stops increasing (max 8 halvings).
    double alpha = 1.0;
    bool accepted = false;
    for (int halving = 0; halving <= 8; ++halving, alpha *= 0.5) {
      const Pose trial(Rotation::from_axis_angle(alpha * step.head<3>()) * pose.rotation,
                       pose.translation + alpha * step.tail<3>());
      double trial_residual;
      if (!squared_residual(kp2d, kp3d, k, trial, trial_residual)) continue;
      if (trial_residual <= residual) {
        pose = trial;
        const double decrease = residual - trial_residual;
        residual = trial_residual;
        report.residual_history.push_back(residual);
        ++report.iterations;
        accepted = true;
        if (decrease < settings.gn_tol) iter = settings.gn_max_iters;  // converged
        break;
      }
    }
    if (!accepted) break;  // no productive step left
  }

  if (residual > 10.0 * report.initial_residual + 1e-12)
    throw NonConvergent("residual " + std::to_string(residual) + " vs initial " +
                        std::to_string(report.initial_residual));

  double mean_depth = 0.0;
  for (const auto& x : kp3d) mean_depth += transform_point(pose, x).z();
  mean_depth /= static_cast<double>(n);
  if (mean_depth <= 0.0) throw NonPositiveDepth(mean_depth);

  report.pose = pose;
  report.final_residual = residual;
  return report;
}

Pose solve_pnp(const std::vector<Vec2>& kp2d, const std::vector<Vec3>& kp3d,
               const CameraIntrinsics& k, const SolverSettings& settings, const Pose* initial) {
  return solve_pnp_detailed(kp2d, kp3d, k, settings, initial).pose;
}

std::pair<Pose, KeypointEstimate> recover_pose_from_field(const VectorField& field,
                                                          const std::vector<Vec3>& kp3d,
                                                          const CameraIntrinsics& k,
                                                          const SolverSettings& settings) {
  KeypointEstimate est = vote_keypoints(field, settings);
  Pose pose = solve_pnp(est.keypoints, kp3d, k, settings);
  return {pose, std::move(est)};
}

}  // namespace posepoison
