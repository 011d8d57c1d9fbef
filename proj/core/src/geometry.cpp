#include "posepoison/geometry.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "posepoison/rng.hpp"

namespace posepoison {

Rotation Rotation::from_matrix(const Mat3& m) {
  if (!m.allFinite()) throw InvalidRotation("non-finite entries");
  const Mat3 gram = m.transpose() * m;
  const double ortho_err = (gram - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (ortho_err > kRotationTolerance)
    throw InvalidRotation("not orthonormal, max deviation " + std::to_string(ortho_err));
  const double det_err = std::abs(m.determinant() - 1.0);
  if (det_err > kRotationTolerance)
    throw InvalidRotation("determinant differs from +1 by " + std::to_string(det_err));
  return Rotation(m, 0);
}

Rotation Rotation::from_axis_angle(const Vec3& axis_angle) {
  const double theta = axis_angle.norm();
  if (theta < 1e-15) return Rotation();
  const Vec3 n = axis_angle / theta;
  Mat3 skew;
  skew << 0, -n.z(), n.y(), n.z(), 0, -n.x(), -n.y(), n.x(), 0;
  const Mat3 m = Mat3::Identity() + std::sin(theta) * skew +
                 (1.0 - std::cos(theta)) * (skew * skew);
  return Rotation(m, 0);
}

Rotation Rotation::random(Rng& rng) {
  // Uniform over SO(3): normalized 4-gaussian quaternion.
  Eigen::Vector4d q;
  for (int i = 0; i < 4; ++i) q[i] = rng.gaussian();
  q.normalize();
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Mat3 m;
  m << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return Rotation(m, 0);
}

Rotation Rotation::projected(const Mat3& m) {
  if (!m.allFinite()) throw InvalidRotation("non-finite entries");
  return Rotation(project_to_so3(m), 0);
}

Mat3 Rotation::project_to_so3(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    Mat3 flip = Mat3::Identity();
    flip(2, 2) = -1.0;
    r = svd.matrixU() * flip * svd.matrixV().transpose();
  }
  return r;
}

Rotation Rotation::operator*(const Rotation& rhs) const {
  const int chain = std::max(chain_, rhs.chain_) + 1;
  Mat3 m = m_ * rhs.m_;
  if (chain >= kRenormalizeEvery) return Rotation(project_to_so3(m), 0);
  return Rotation(m, chain);
}

Vec3 Rotation::log() const {
  const double cos_theta = std::clamp((m_.trace() - 1.0) / 2.0, -1.0, 1.0);
  const double theta = std::acos(cos_theta);
  if (theta < 1e-12) return Vec3::Zero();
  if (theta > std::numbers::pi - 1e-6) {
    // Near pi the skew part vanishes; recover the axis from the symmetric part.
    Vec3 axis;
    const Mat3 b = (m_ + Mat3::Identity()) / 2.0;  // = n n^T at exactly pi
    int i = 0;
    b.diagonal().maxCoeff(&i);
    axis = b.col(i) / std::sqrt(std::max(b(i, i), 1e-18));
    axis.normalize();
    // Fix sign from the skew part when any of it survives.
    const Vec3 skew(m_(2, 1) - m_(1, 2), m_(0, 2) - m_(2, 0), m_(1, 0) - m_(0, 1));
    if (skew.dot(axis) < 0.0) axis = -axis;
    return axis * theta;
  }
  const Vec3 skew(m_(2, 1) - m_(1, 2), m_(0, 2) - m_(2, 0), m_(1, 0) - m_(0, 1));
  return skew * (theta / (2.0 * std::sin(theta)));
}

double Rotation::angle_to(const Rotation& other) const {
  const double tr = (m_ * other.m_.transpose()).trace();
  return std::acos(std::clamp((tr - 1.0) / 2.0, -1.0, 1.0));
}

Pose compose(const Pose& a, const Pose& b) {
  return Pose(a.rotation * b.rotation, a.rotation * b.translation + a.translation);
}

Pose inverse(const Pose& p) {
  const Rotation rinv = p.rotation.inverse();
  return Pose(rinv, -(rinv * p.translation));
}

Pixel project(const CameraIntrinsics& k, const Pose& p, const Vec3& x) {
  const Vec3 pc = transform_point(p, x);
  if (pc.z() <= kMinProjectionDepth) throw NonPositiveDepth(pc.z());
  return Pixel(k.fx * pc.x() / pc.z() + k.cx, k.fy * pc.y() / pc.z() + k.cy);
}

double rotation_angle(const Rotation& a, const Rotation& b) { return a.angle_to(b); }

Pose apply_offset(const Pose& gt, const Pose& delta, OffsetFrame frame) {
  return frame == OffsetFrame::kCamera ? compose(delta, gt) : compose(gt, delta);
}

Pose interpolate_pose(const Pose& a, const Pose& b, double w) {
  const Rotation rel = b.rotation * a.rotation.inverse();
  const Rotation r = Rotation::from_axis_angle(w * rel.log()) * a.rotation;
  return Pose(r, (1.0 - w) * a.translation + w * b.translation);
}

std::array<double, 12> pose_to_flat(const Pose& p) {
  std::array<double, 12> out;
  const Mat3& m = p.rotation.matrix();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) out[static_cast<std::size_t>(r * 3 + c)] = m(r, c);
  for (int i = 0; i < 3; ++i) out[static_cast<std::size_t>(9 + i)] = p.translation[i];
  return out;
}

Pose pose_from_flat(const std::array<double, 12>& v) {
  Mat3 m;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m(r, c) = v[static_cast<std::size_t>(r * 3 + c)];
  return Pose(Rotation::from_matrix(m), Vec3(v[9], v[10], v[11]));
}

Rotation random_rotation(Rng& rng) { return Rotation::random(rng); }

bool approx_equal(const Pose& a, const Pose& b, double tol) {
  return (a.rotation.matrix() - b.rotation.matrix()).cwiseAbs().maxCoeff() <= tol &&
         (a.translation - b.translation).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace posepoison
