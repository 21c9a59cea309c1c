// Copyright 2026 The dyninit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <string>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "dyninit/errors.hpp"

namespace dyninit {

template <typename Scalar>
using Vector2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;

/// Hamilton quaternion, stored (w, x, y, z) in Eigen's convention.
template <typename Scalar>
using Quaternion = Eigen::Quaternion<Scalar>;

/// Pinhole camera for one frame. Extrinsics map world to camera: X_cam = R X_world + t.
template <typename Scalar>
struct CameraFrame {
  int frame_index = 0;
  Matrix3<Scalar> K = Matrix3<Scalar>::Identity();
  Matrix3<Scalar> R = Matrix3<Scalar>::Identity();
  Vector3<Scalar> t = Vector3<Scalar>::Zero();
  int width = 0;
  int height = 0;

  Scalar fx() const { return K(0, 0); }
  Scalar fy() const { return K(1, 1); }

  /// Camera centre in world coordinates.
  Vector3<Scalar> center() const { return -R.transpose() * t; }

  Vector3<Scalar> to_camera(const Vector3<Scalar>& p_world) const { return R * p_world + t; }
};

using Camera = CameraFrame<double>;

template <typename Scalar>
struct RigidTransform {
  Matrix3<Scalar> R = Matrix3<Scalar>::Identity();
  Vector3<Scalar> t = Vector3<Scalar>::Zero();

  Vector3<Scalar> operator()(const Vector3<Scalar>& p) const { return R * p + t; }

  RigidTransform inverse() const { return {R.transpose(), -(R.transpose() * t)}; }

  /// (this ∘ other)(p) = this(other(p)).
  RigidTransform operator*(const RigidTransform& other) const { return {R * other.R, R * other.t + t}; }

  static RigidTransform identity() { return {}; }
};

using Rigid = RigidTransform<double>;

template <typename Scalar>
struct Projection {
  Vector2<Scalar> pixel;
  Scalar depth;
};

// ---------------------------------------------------------------------------
// Validation

inline constexpr double kOrthonormalTolerance = 1e-9;
inline constexpr double kUnitQuaternionTolerance = 1e-9;

template <typename Derived>
bool is_rotation(const Eigen::MatrixBase<Derived>& R, double tol = kOrthonormalTolerance) {
  using Scalar = typename Derived::Scalar;
  const Matrix3<Scalar> gram = R.transpose() * R - Matrix3<Scalar>::Identity();
  return gram.cwiseAbs().maxCoeff() < tol && std::abs(R.determinant() - Scalar(1)) < tol;
}

template <typename Scalar>
void validate(const CameraFrame<Scalar>& cam) {
  if (!is_rotation(cam.R)) {
    throw Error(ErrorCode::NonOrthonormalMatrix,
                "camera " + std::to_string(cam.frame_index) + ": R is not a proper rotation");
  }
  const auto& K = cam.K;
  if (K(1, 0) != 0 || K(2, 0) != 0 || K(2, 1) != 0 || K(2, 2) != 1 || !(K(0, 0) > 0) || !(K(1, 1) > 0)) {
    throw Error(ErrorCode::InvalidArgument,
                "camera " + std::to_string(cam.frame_index) + ": K must be upper-triangular with K22=1 and positive focals");
  }
  if (cam.width <= 0 || cam.height <= 0) {
    throw Error(ErrorCode::InvalidArgument, "camera " + std::to_string(cam.frame_index) + ": non-positive image size");
  }
}

// ---------------------------------------------------------------------------
// Projection

template <typename Scalar>
Projection<Scalar> project(const Vector3<Scalar>& p_world, const CameraFrame<Scalar>& cam) {
  const Vector3<Scalar> pc = cam.to_camera(p_world);
  if (!(pc.z() > Scalar(1e-12))) {
    throw Error(ErrorCode::PointBehindCamera, "camera-space z = " + std::to_string(double(pc.z())));
  }
  const Vector3<Scalar> h = cam.K * pc;
  return {h.template head<2>() / h.z(), pc.z()};
}

template <typename Scalar>
Vector3<Scalar> unproject(const Vector2<Scalar>& pixel, Scalar depth, const CameraFrame<Scalar>& cam) {
  if (!(depth > Scalar(0))) {
    throw Error(ErrorCode::NonPositiveDepth, "depth = " + std::to_string(double(depth)));
  }
  const Vector3<Scalar> ray = cam.K.template triangularView<Eigen::Upper>().solve(pixel.homogeneous());
  const Vector3<Scalar> pc = ray * (depth / ray.z());
  return cam.R.transpose() * (pc - cam.t);
}

// ---------------------------------------------------------------------------
// Epipolar geometry

template <typename Derived>
Matrix3<typename Derived::Scalar> skew(const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  Matrix3<Scalar> S;
  S << Scalar(0), -v(2), v(1),
       v(2), Scalar(0), -v(0),
       -v(1), v(0), Scalar(0);
  return S;
}

/// Relative pose taking camera-a coordinates to camera-b coordinates.
template <typename Scalar>
RigidTransform<Scalar> relative_pose(const CameraFrame<Scalar>& a, const CameraFrame<Scalar>& b) {
  const Matrix3<Scalar> R = b.R * a.R.transpose();
  return {R, b.t - R * a.t};
}

/// F with x_b^T F x_a = 0 for homogeneous pixels, scaled to unit Frobenius norm.
template <typename Scalar>
Matrix3<Scalar> fundamental_matrix(const CameraFrame<Scalar>& cam_a, const CameraFrame<Scalar>& cam_b) {
  if ((cam_a.center() - cam_b.center()).norm() <= Scalar(1e-9)) {
    throw Error(ErrorCode::DegenerateBaseline, "frames " + std::to_string(cam_a.frame_index) + " and " +
                                                   std::to_string(cam_b.frame_index) + " share a camera centre");
  }
  const auto rel = relative_pose(cam_a, cam_b);
  const Matrix3<Scalar> E = skew(rel.t) * rel.R;
  const Matrix3<Scalar> Ka_inv = cam_a.K.inverse();
  const Matrix3<Scalar> Kb_inv = cam_b.K.inverse();
  Matrix3<Scalar> F = Kb_inv.transpose() * E * Ka_inv;
  return F / F.norm();
}

// ---------------------------------------------------------------------------
// Quaternions

template <typename Scalar>
Quaternion<Scalar> quat_multiply(const Quaternion<Scalar>& a, const Quaternion<Scalar>& b) {
  return a * b;  // Eigen's product is the Hamilton product on (w, x, y, z).
}

template <typename Scalar>
Quaternion<Scalar> quat_normalize(const Quaternion<Scalar>& q) {
  return Quaternion<Scalar>(q.coeffs() / q.coeffs().norm());
}

template <typename Scalar>
Matrix3<Scalar> quat_to_rotmat(const Quaternion<Scalar>& q) {
  if (std::abs(q.norm() - Scalar(1)) >= Scalar(kUnitQuaternionTolerance)) {
    throw Error(ErrorCode::NonUnitQuaternion, "|q| = " + std::to_string(double(q.norm())));
  }
  return q.toRotationMatrix();
}

/// Inverse of quat_to_rotmat; picks the representative with w >= 0.
template <typename Derived>
Quaternion<typename Derived::Scalar> rotmat_to_quat(const Eigen::MatrixBase<Derived>& R) {
  using Scalar = typename Derived::Scalar;
  if (!is_rotation(R)) throw Error(ErrorCode::NonOrthonormalMatrix, "matrix is not a proper rotation");
  Quaternion<Scalar> q{Matrix3<Scalar>(R)};
  q.normalize();
  if (q.w() < Scalar(0)) q.coeffs() = -q.coeffs();
  return q;
}

/// Rotation angle of Ra^T Rb in radians. atan2 form keeps precision near zero.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar geodesic_distance(const Eigen::MatrixBase<DerivedA>& Ra, const Eigen::MatrixBase<DerivedB>& Rb) {
  using Scalar = typename DerivedA::Scalar;
  const Matrix3<Scalar> D = Ra.transpose() * Rb;
  const Vector3<Scalar> axis(D(2, 1) - D(1, 2), D(0, 2) - D(2, 0), D(1, 0) - D(0, 1));
  return std::atan2(axis.norm() / Scalar(2), (D.trace() - Scalar(1)) / Scalar(2));
}

/// Angle between two unit quaternions as rotations (sign-insensitive).
template <typename Scalar>
Scalar geodesic_distance(const Quaternion<Scalar>& a, const Quaternion<Scalar>& b) {
  const Quaternion<Scalar> d = a.conjugate() * b;
  return Scalar(2) * std::atan2(d.vec().norm(), std::abs(d.w()));
}

}  // namespace dyninit
