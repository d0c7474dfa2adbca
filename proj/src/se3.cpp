#include "voclip/se3.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace voclip {

namespace {

constexpr double kGimbalTol = 1e-9;
// Compositions re-project to SO(3) once drift exceeds this.
constexpr double kReorthoTrigger = 1e-10;

bool finite(const Vec3& v) {
  return std::isfinite(v[0]) && std::isfinite(v[1]) && std::isfinite(v[2]);
}

}  // namespace

Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
Vec3 operator*(double s, const Vec3& v) { return {s * v[0], s * v[1], s * v[2]}; }
double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

Mat3 mat3_identity() {
  return {{{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}}};
}

Mat3 mat3_mul(const Mat3& a, const Mat3& b) {
  Mat3 c{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
    }
  }
  return c;
}

Mat3 mat3_transpose(const Mat3& m) {
  Mat3 t{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) t[i][j] = m[j][i];
  }
  return t;
}

Vec3 mat3_apply(const Mat3& m, const Vec3& v) {
  return {m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
          m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
          m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2]};
}

double mat3_det(const Mat3& m) {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
         m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

double orthonormality_error(const Mat3& r) {
  const Mat3 g = mat3_mul(mat3_transpose(r), r);
  double err = 0.0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      err = std::max(err, std::abs(g[i][j] - (i == j ? 1.0 : 0.0)));
    }
  }
  return err;
}

Mat3 reorthonormalize(const Mat3& r) {
  Mat3 x = r;
  for (int iter = 0; iter < 20 && orthonormality_error(x) > 1e-15; ++iter) {
    // inverse-transpose of a near-rotation via adjugate / det
    const double d = mat3_det(x);
    Mat3 adj_t{};  // transpose of the adjugate = cofactor matrix
    adj_t[0][0] = x[1][1] * x[2][2] - x[1][2] * x[2][1];
    adj_t[0][1] = x[1][2] * x[2][0] - x[1][0] * x[2][2];
    adj_t[0][2] = x[1][0] * x[2][1] - x[1][1] * x[2][0];
    adj_t[1][0] = x[0][2] * x[2][1] - x[0][1] * x[2][2];
    adj_t[1][1] = x[0][0] * x[2][2] - x[0][2] * x[2][0];
    adj_t[1][2] = x[0][1] * x[2][0] - x[0][0] * x[2][1];
    adj_t[2][0] = x[0][1] * x[1][2] - x[0][2] * x[1][1];
    adj_t[2][1] = x[0][2] * x[1][0] - x[0][0] * x[1][2];
    adj_t[2][2] = x[0][0] * x[1][1] - x[0][1] * x[1][0];
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) x[i][j] = 0.5 * (x[i][j] + adj_t[i][j] / d);
    }
  }
  return x;
}

RotationMatrix RotationMatrix::from_matrix(const Mat3& m, double tol) {
  if (orthonormality_error(m) > tol) {
    throw std::invalid_argument("rotation matrix is not orthonormal within " + std::to_string(tol));
  }
  if (std::abs(mat3_det(m) - 1.0) > tol) {
    throw std::invalid_argument("rotation matrix determinant is not +1");
  }
  RotationMatrix r;
  r.m = m;
  return r;
}

RotationMatrix RotationMatrix::unchecked(const Mat3& m) {
  RotationMatrix r;
  r.m = m;
  return r;
}

RotationMatrix euler_to_matrix(const Vec3& angles) {
  if (!finite(angles)) throw std::invalid_argument("euler_to_matrix: non-finite angle");
  const double ca = std::cos(angles[0]), sa = std::sin(angles[0]);
  const double cb = std::cos(angles[1]), sb = std::sin(angles[1]);
  const double cc = std::cos(angles[2]), sc = std::sin(angles[2]);
  Mat3 m{};
  m[0][0] = cc * cb;
  m[0][1] = -sc * ca + cc * sb * sa;
  m[0][2] = sc * sa + cc * sb * ca;
  m[1][0] = sc * cb;
  m[1][1] = cc * ca + sc * sb * sa;
  m[1][2] = -cc * sa + sc * sb * ca;
  m[2][0] = -sb;
  m[2][1] = cb * sa;
  m[2][2] = cb * ca;
  return RotationMatrix::unchecked(m);
}

Vec3 matrix_to_euler(const RotationMatrix& r) {
  if (orthonormality_error(r.m) > 1e-6) {
    throw std::invalid_argument("matrix_to_euler: input is not orthonormal");
  }
  const Mat3& m = r.m;
  const double sb = -m[2][0];
  const double cb = std::sqrt(std::max(0.0, 1.0 - sb * sb));
  if (cb < kGimbalTol) {
    // Gimbal lock: only rx -+ rz is observable; fix rx := 0.
    const double ry = sb > 0.0 ? M_PI / 2.0 : -M_PI / 2.0;
    const double rz = std::atan2(-m[0][1], m[1][1]);
    return {0.0, ry, rz};
  }
  const double rx = std::atan2(m[2][1], m[2][2]);
  const double ry = std::asin(std::clamp(sb, -1.0, 1.0));
  const double rz = std::atan2(m[1][0], m[0][0]);
  return {rx, ry, rz};
}

TransformSE3 compose(const TransformSE3& a, const TransformSE3& b) {
  TransformSE3 out;
  Mat3 r = mat3_mul(a.rotation.m, b.rotation.m);
  if (orthonormality_error(r) > kReorthoTrigger) r = reorthonormalize(r);
  out.rotation = RotationMatrix::unchecked(r);
  out.translation = mat3_apply(a.rotation.m, b.translation) + a.translation;
  return out;
}

TransformSE3 invert(const TransformSE3& t) {
  TransformSE3 out;
  const Mat3 rt = mat3_transpose(t.rotation.m);
  out.rotation = RotationMatrix::unchecked(rt);
  out.translation = -1.0 * mat3_apply(rt, t.translation);
  return out;
}

TransformSE3 pose_to_transform(const Pose6DoF& p) {
  TransformSE3 t;
  t.rotation = euler_to_matrix(p.angles);
  t.translation = p.translation;
  return t;
}

Pose6DoF transform_to_pose(const TransformSE3& t) {
  Pose6DoF p;
  p.angles = matrix_to_euler(t.rotation);
  p.translation = t.translation;
  return p;
}

Trajectory relative_to_absolute(const std::vector<Pose6DoF>& motions, const TransformSE3& origin) {
  Trajectory traj;
  traj.poses.reserve(motions.size() + 1);
  traj.poses.push_back(origin);
  for (const Pose6DoF& m : motions) {
    traj.poses.push_back(compose(traj.poses.back(), pose_to_transform(m)));
  }
  return traj;
}

std::vector<Pose6DoF> absolute_to_relative(const Trajectory& traj) {
  if (traj.size() < 2) {
    throw std::invalid_argument("absolute_to_relative: need at least 2 poses, got " + std::to_string(traj.size()));
  }
  std::vector<Pose6DoF> motions;
  motions.reserve(traj.size() - 1);
  for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
    motions.push_back(transform_to_pose(compose(invert(traj.poses[k]), traj.poses[k + 1])));
  }
  return motions;
}

}  // namespace voclip
