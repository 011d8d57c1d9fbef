#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <numbers>

#include "posepoison/errors.hpp"

namespace posepoison {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// 3D point in meters (world or camera frame per context) and continuous
// pixel coordinates.
using Point3 = Vec3;
using Pixel = Vec2;

class Rng;

constexpr double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }
constexpr double rad2deg(double rad) { return rad * 180.0 / std::numbers::pi; }

// Depth at or below this is treated as "at or behind the camera".
inline constexpr double kMinProjectionDepth = 1e-9;

// Tolerance for the orthonormality / det(+1) invariants.
inline constexpr double kRotationTolerance = 1e-9;

// Compositions allowed before the matrix is re-projected onto SO(3).
inline constexpr int kRenormalizeEvery = 64;

// Rotation matrix constrained to SO(3). Composition chains are re-projected
// via polar decomposition every kRenormalizeEvery products to stop drift.
class Rotation {
 public:
  Rotation() : m_(Mat3::Identity()) {}

  // Validates orthonormality and det(+1) within kRotationTolerance.
  static Rotation from_matrix(const Mat3& m);

  // Rodrigues; the vector's norm is the angle in radians.
  static Rotation from_axis_angle(const Vec3& axis_angle);

  // Nearest rotation in Frobenius norm (polar projection via SVD). Accepts
  // any matrix with positive-determinant polar factor.
  static Rotation projected(const Mat3& m);

  static Rotation random(Rng& rng);  // uniform over SO(3)

  const Mat3& matrix() const { return m_; }

  Rotation inverse() const { return Rotation(m_.transpose(), chain_); }

  Vec3 operator*(const Vec3& v) const { return m_ * v; }

  Rotation operator*(const Rotation& rhs) const;

  // Axis-angle vector with angle in [0, pi].
  Vec3 log() const;

  double angle_to(const Rotation& other) const;

 private:
  Rotation(const Mat3& m, int chain) : m_(m), chain_(chain) {}
  static Mat3 project_to_so3(const Mat3& m);

  Mat3 m_;
  int chain_ = 0;  // products since the last re-projection
};

// Rigid transform: x_camera = rotation * x + translation. Translation in meters.
struct Pose {
  Rotation rotation;
  Vec3 translation = Vec3::Zero();

  Pose() = default;
  Pose(const Rotation& r, const Vec3& t) : rotation(r), translation(t) {}
};

// Pinhole parameters in pixels.
struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;

  void validate() const {
    if (!(fx > 0.0) || !(fy > 0.0)) throw InvalidIntrinsics("fx and fy must be positive");
    if (!std::isfinite(cx) || !std::isfinite(cy)) throw InvalidIntrinsics("non-finite center");
  }
};

// Applies b first, then a: result * x == a * (b * x).
Pose compose(const Pose& a, const Pose& b);

Pose inverse(const Pose& p);

inline Vec3 transform_point(const Pose& p, const Vec3& x) {
  return p.rotation * x + p.translation;
}

// Pinhole projection; throws NonPositiveDepth when the camera-frame depth is
// at or below kMinProjectionDepth.
Pixel project(const CameraIntrinsics& k, const Pose& p, const Vec3& x);

// Geodesic angle between two rotations in [0, pi]. The arccos argument is
// clamped to [-1, 1]; floating-point traces can exceed the bounds by ~1e-15.
double rotation_angle(const Rotation& a, const Rotation& b);

// Which side the attacker offset composes on. Camera frame (delta ∘ gt) is
// the default: the offset is defined relative to the camera's view.
enum class OffsetFrame { kCamera, kObject };

Pose apply_offset(const Pose& gt, const Pose& delta,
                  OffsetFrame frame = OffsetFrame::kCamera);

// Geodesic interpolation, a at w=0 to b at w=1: shortest-arc fractional
// rotation, linear translation.
Pose interpolate_pose(const Pose& a, const Pose& b, double w);

// Flat serialization: row-major rotation then translation, 12 doubles.
std::array<double, 12> pose_to_flat(const Pose& p);
Pose pose_from_flat(const std::array<double, 12>& v);

Rotation random_rotation(Rng& rng);

bool approx_equal(const Pose& a, const Pose& b, double tol);

}  // namespace posepoison
