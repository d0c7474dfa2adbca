#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace voclip {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<std::array<double, 3>, 3>;
using Vec6 = std::array<double, 6>;

Vec3 operator+(const Vec3& a, const Vec3& b);
Vec3 operator-(const Vec3& a, const Vec3& b);
Vec3 operator*(double s, const Vec3& v);
double dot(const Vec3& a, const Vec3& b);
double norm(const Vec3& v);

Mat3 mat3_identity();
Mat3 mat3_mul(const Mat3& a, const Mat3& b);
Mat3 mat3_transpose(const Mat3& m);
Vec3 mat3_apply(const Mat3& m, const Vec3& v);
double mat3_det(const Mat3& m);

/// Max |R^T R - I| entry; 0 for perfectly orthonormal R.
double orthonormality_error(const Mat3& r);

/// Nearest rotation by iterated polar averaging R <- (R + R^-T) / 2.
Mat3 reorthonormalize(const Mat3& r);

/// 3x3 rotation, checked member of SO(3).
struct RotationMatrix {
  Mat3 m;

  RotationMatrix() : m(mat3_identity()) {}
  /// Validates orthonormality and det = +1 within tol; throws otherwise.
  static RotationMatrix from_matrix(const Mat3& m, double tol = 1e-6);
  /// Accepts m as-is; the caller guarantees validity.
  static RotationMatrix unchecked(const Mat3& m);
};

/// Rigid motion [R t; 0 1].
struct TransformSE3 {
  RotationMatrix rotation;
  Vec3 translation{0.0, 0.0, 0.0};

  static TransformSE3 identity() { return TransformSE3{}; }
};

/// Flattened 6-DoF motion: Euler angles (rx, ry, rz) in radians followed by
/// translation (tx, ty, tz) in meters.
struct Pose6DoF {
  Vec3 angles{0.0, 0.0, 0.0};
  Vec3 translation{0.0, 0.0, 0.0};

  Vec6 flat() const {
    return {angles[0], angles[1], angles[2], translation[0], translation[1], translation[2]};
  }
  static Pose6DoF from_flat(const Vec6& v) {
    return Pose6DoF{{v[0], v[1], v[2]}, {v[3], v[4], v[5]}};
  }
};

/// Absolute camera-to-world poses, one per frame.
struct Trajectory {
  std::vector<TransformSE3> poses;

  std::size_t size() const { return poses.size(); }
  Vec3 position(std::size_t i) const { return poses[i].translation; }
};

/// R = Rz(rz) * Ry(ry) * Rx(rx), extrinsic XYZ convention.
RotationMatrix euler_to_matrix(const Vec3& angles);

/// Inverse of euler_to_matrix. At gimbal lock (|cos ry| < 1e-9) the tie-break
/// rx := 0 is applied; the returned angles always reconstruct R.
Vec3 matrix_to_euler(const RotationMatrix& r);

TransformSE3 compose(const TransformSE3& a, const TransformSE3& b);
TransformSE3 invert(const TransformSE3& t);

TransformSE3 pose_to_transform(const Pose6DoF& p);
Pose6DoF transform_to_pose(const TransformSE3& t);

/// Integrates relative motions starting from origin; result has
/// motions.size() + 1 poses with poses[0] = origin.
Trajectory relative_to_absolute(const std::vector<Pose6DoF>& motions,
                                const TransformSE3& origin = TransformSE3::identity());

/// Motion k = poses[k]^-1 * poses[k+1]; requires at least 2 poses.
std::vector<Pose6DoF> absolute_to_relative(const Trajectory& traj);

}  // namespace voclip
