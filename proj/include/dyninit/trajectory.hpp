// Copyright 2026 The dyninit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Core>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "dyninit/errors.hpp"
#include "dyninit/geometry.hpp"

namespace dyninit {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Poly-Fourier basis over normalised time tau = frame / (T - 1) in [0, 1].
///
/// Column layout of every coefficient block:
///   [1 | tau^1 .. tau^d_pol | cos(1 w tau), sin(1 w tau), .., cos(d_F w tau), sin(d_F w tau)]
struct BasisSpec {
  int d_pol = 3;
  int d_fourier = 32;
  double omega = 2.0 * std::numbers::pi;
  int frame_count = 0;

  int dim() const { return 1 + d_pol + 2 * d_fourier; }

  double normalized_time(int frame) const {
    return frame_count > 1 ? static_cast<double>(frame) / static_cast<double>(frame_count - 1) : 0.0;
  }

  bool operator==(const BasisSpec&) const = default;
};

template <typename Scalar>
VectorX<Scalar> basis_row(Scalar tau, const BasisSpec& spec) {
  if (!(tau >= Scalar(0) && tau <= Scalar(1))) {
    throw Error(ErrorCode::InvalidArgument, "normalised time outside [0, 1]: " + std::to_string(double(tau)));
  }
  VectorX<Scalar> row(spec.dim());
  row(0) = Scalar(1);
  Scalar power = Scalar(1);
  for (int k = 1; k <= spec.d_pol; ++k) {
    power *= tau;
    row(k) = power;
  }
  const int base = 1 + spec.d_pol;
  for (int k = 1; k <= spec.d_fourier; ++k) {
    const Scalar angle = Scalar(k) * Scalar(spec.omega) * tau;
    row(base + 2 * (k - 1)) = std::cos(angle);
    row(base + 2 * (k - 1) + 1) = std::sin(angle);
  }
  return row;
}

/// T x dim matrix whose row t is basis_row(tau_t).
template <typename Scalar = double>
MatrixX<Scalar> design_matrix(const BasisSpec& spec) {
  MatrixX<Scalar> A(spec.frame_count, spec.dim());
  for (int t = 0; t < spec.frame_count; ++t) A.row(t) = basis_row(Scalar(spec.normalized_time(t)), spec).transpose();
  return A;
}

/// One curve per channel: coefficients is channels x dim.
template <typename Scalar>
struct PolyFourierCurve {
  BasisSpec spec;
  MatrixX<Scalar> coefficients;

  VectorX<Scalar> operator()(Scalar tau) const { return coefficients * basis_row(tau, spec); }
};

template <typename Scalar>
struct FitResult {
  PolyFourierCurve<Scalar> curve;
  VectorX<Scalar> residual_rms;  // per channel
};

/// Least-squares Poly-Fourier fitting for every trajectory sampled on one
/// frame grid. The design matrix is factored once (column-pivoting QR, never
/// normal equations) and reused for each right-hand side.
template <typename Scalar = double>
class TrajectoryFitter {
 public:
  static constexpr double kMaxCondition = 1e12;

  explicit TrajectoryFitter(const BasisSpec& spec, Scalar ridge = Scalar(0)) : spec_(spec), ridge_(ridge) {
    if (spec.d_pol < 0 || spec.d_fourier < 0 || spec.frame_count < 1) {
      throw Error(ErrorCode::InvalidArgument, "invalid basis parameters");
    }
    if (ridge < Scalar(0)) throw Error(ErrorCode::InvalidArgument, "ridge must be non-negative");
    design_ = design_matrix<Scalar>(spec);
    const int dim = spec.dim();
    if (ridge == Scalar(0)) {
      if (spec.frame_count < dim) {
        throw Error(ErrorCode::UnderdeterminedSystem, std::to_string(spec.frame_count) + " samples for " +
                                                          std::to_string(dim) + " coefficients");
      }
      const VectorX<Scalar> sv = Eigen::JacobiSVD<MatrixX<Scalar>>(design_).singularValues();
      condition_ = sv(0) / sv(sv.size() - 1);
      if (!(condition_ <= Scalar(kMaxCondition))) {
        throw Error(ErrorCode::IllConditioned, "design matrix condition " + std::to_string(double(condition_)));
      }
      qr_.compute(design_);
    } else {
      MatrixX<Scalar> augmented(spec.frame_count + dim, dim);
      augmented << design_, std::sqrt(ridge) * MatrixX<Scalar>::Identity(dim, dim);
      const VectorX<Scalar> sv = Eigen::JacobiSVD<MatrixX<Scalar>>(augmented).singularValues();
      condition_ = sv(0) / sv(sv.size() - 1);
      qr_.compute(augmented);
    }
  }

  const BasisSpec& spec() const { return spec_; }
  const MatrixX<Scalar>& design() const { return design_; }
  Scalar condition() const { return condition_; }

  /// samples: T x channels (one row per frame).
  template <typename Derived>
  FitResult<Scalar> fit(const Eigen::MatrixBase<Derived>& samples) const {
    if (samples.rows() != spec_.frame_count) {
      throw Error(ErrorCode::DimensionMismatch, "trajectory has " + std::to_string(samples.rows()) + " frames, basis expects " +
                                                    std::to_string(spec_.frame_count));
    }
    MatrixX<Scalar> X;
    if (ridge_ == Scalar(0)) {
      X = qr_.solve(MatrixX<Scalar>(samples));
    } else {
      MatrixX<Scalar> rhs = MatrixX<Scalar>::Zero(spec_.frame_count + spec_.dim(), samples.cols());
      rhs.topRows(spec_.frame_count) = samples;
      X = qr_.solve(rhs);
    }
    const MatrixX<Scalar> residual = design_ * X - MatrixX<Scalar>(samples);
    FitResult<Scalar> out;
    out.curve.spec = spec_;
    out.curve.coefficients = X.transpose();
    out.residual_rms = (residual.colwise().squaredNorm() / Scalar(spec_.frame_count)).cwiseSqrt().transpose();
    return out;
  }

 private:
  BasisSpec spec_;
  Scalar ridge_;
  MatrixX<Scalar> design_;
  Eigen::ColPivHouseholderQR<MatrixX<Scalar>> qr_;
  Scalar condition_ = Scalar(0);
};

template <typename Derived>
FitResult<typename Derived::Scalar> fit(const Eigen::MatrixBase<Derived>& samples, const BasisSpec& spec,
                                        typename Derived::Scalar ridge = 0) {
  return TrajectoryFitter<typename Derived::Scalar>(spec, ridge).fit(samples);
}

// ---------------------------------------------------------------------------
// Time-dependent deformation of one dynamic Gaussian.
//
// position is 3 x dim; its constant column is the canonical mean mu0 and the
// remaining columns are the offset coefficients. rotation is 4 x (dim - 1) over
// quaternion components (w, x, y, z) with no constant column.

template <typename Scalar>
struct DeformationParams {
  BasisSpec spec;
  Eigen::Matrix<Scalar, 3, Eigen::Dynamic> position;
  Eigen::Matrix<Scalar, 4, Eigen::Dynamic> rotation;
  Quaternion<Scalar> q0 = Quaternion<Scalar>::Identity();

  static DeformationParams zero(const BasisSpec& spec) {
    DeformationParams p;
    p.spec = spec;
    p.position.setZero(3, spec.dim());
    p.rotation.setZero(4, spec.dim() - 1);
    return p;
  }

  Vector3<Scalar> mu0() const { return position.col(0); }
};

template <typename Scalar>
Vector3<Scalar> eval_position(const DeformationParams<Scalar>& params, Scalar tau) {
  const VectorX<Scalar> phi = basis_row(tau, params.spec);
  const int n = params.spec.dim() - 1;
  return params.position.col(0) + params.position.rightCols(n) * phi.tail(n);
}

namespace detail {

/// 4x4 matrix M with (p ⊗ q) = M p for quaternions stored as (w, x, y, z).
template <typename Scalar>
Eigen::Matrix<Scalar, 4, 4> right_multiplication(const Quaternion<Scalar>& q) {
  Eigen::Matrix<Scalar, 4, 4> M;
  M << q.w(), -q.x(), -q.y(), -q.z(),
       q.x(),  q.w(),  q.z(), -q.y(),
       q.y(), -q.z(),  q.w(),  q.x(),
       q.z(),  q.y(), -q.x(),  q.w();
  return M;
}

template <typename Scalar>
Eigen::Matrix<Scalar, 4, 1> rotation_raw(const DeformationParams<Scalar>& params, const VectorX<Scalar>& phi) {
  const int n = params.spec.dim() - 1;
  Eigen::Matrix<Scalar, 4, 1> v = params.rotation * phi.tail(n);
  v(0) += Scalar(1);  // identity quaternion
  return v;
}

template <typename Scalar>
Scalar checked_norm(const Eigen::Matrix<Scalar, 4, 1>& v) {
  const Scalar n = v.norm();
  if (!(n >= Scalar(1e-9))) throw Error(ErrorCode::DegenerateRotation, "rotation offset cancels the identity quaternion");
  return n;
}

}  // namespace detail

template <typename Scalar>
Quaternion<Scalar> eval_rotation(const DeformationParams<Scalar>& params, Scalar tau) {
  const VectorX<Scalar> phi = basis_row(tau, params.spec);
  const Eigen::Matrix<Scalar, 4, 1> v = detail::rotation_raw(params, phi);
  const Scalar n = detail::checked_norm(v);
  const Quaternion<Scalar> dq(v(0) / n, v(1) / n, v(2) / n, v(3) / n);
  return quat_multiply(dq, params.q0);
}

/// d mu / d position coefficients, 3 x (3 dim), coefficients flattened row-major
/// (all of x, then y, then z).
template <typename Scalar>
Eigen::Matrix<Scalar, 3, Eigen::Dynamic> jacobian_position(const DeformationParams<Scalar>& params, Scalar tau) {
  const VectorX<Scalar> phi = basis_row(tau, params.spec);
  const int dim = params.spec.dim();
  Eigen::Matrix<Scalar, 3, Eigen::Dynamic> J = Eigen::Matrix<Scalar, 3, Eigen::Dynamic>::Zero(3, 3 * dim);
  for (int axis = 0; axis < 3; ++axis) J.block(axis, axis * dim, 1, dim) = phi.transpose();
  return J;
}

/// d q / d rotation coefficients, 4 x (4 (dim - 1)), rows (w, x, y, z),
/// coefficients flattened row-major by quaternion component.
template <typename Scalar>
Eigen::Matrix<Scalar, 4, Eigen::Dynamic> jacobian_rotation(const DeformationParams<Scalar>& params, Scalar tau) {
  const VectorX<Scalar> phi = basis_row(tau, params.spec);
  const int n = params.spec.dim() - 1;
  const Eigen::Matrix<Scalar, 4, 1> v = detail::rotation_raw(params, phi);
  const Scalar norm = detail::checked_norm(v);
  const Eigen::Matrix<Scalar, 4, 1> u = v / norm;
  const Eigen::Matrix<Scalar, 4, 4> normalize =
      (Eigen::Matrix<Scalar, 4, 4>::Identity() - u * u.transpose()) / norm;
  const Eigen::Matrix<Scalar, 4, 4> chain = detail::right_multiplication(params.q0) * normalize;
  Eigen::Matrix<Scalar, 4, Eigen::Dynamic> J(4, 4 * n);
  for (int c = 0; c < 4; ++c) J.block(0, c * n, 4, n) = chain.col(c) * phi.tail(n).transpose();
  return J;
}

}  // namespace dyninit
