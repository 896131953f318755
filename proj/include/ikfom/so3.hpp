#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "ikfom/errors.hpp"

namespace ikfom {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

namespace detail {
inline constexpr double kSmallAngle = 1e-4;
inline constexpr double kLogNearPi = 1e-6;
}  // namespace detail

/// Cross-product matrix: skew(a) * b == a.cross(b).
inline Mat3 skew(const Vec3& a) {
  Mat3 K;
  K << 0.0, -a.z(), a.y(),
       a.z(), 0.0, -a.x(),
       -a.y(), a.x(), 0.0;
  return K;
}

/// Exponential map of so(3) (Rodrigues).
inline Mat3 so3_exp(const Vec3& w) {
  const double t2 = w.squaredNorm();
  const Mat3 K = skew(w);
  double a, b;
  if (t2 < detail::kSmallAngle * detail::kSmallAngle) {
    a = 1.0 - t2 / 6.0 + t2 * t2 / 120.0;
    b = 0.5 - t2 / 24.0 + t2 * t2 / 720.0;
  } else {
    const double t = std::sqrt(t2);
    a = std::sin(t) / t;
    const double sh = std::sin(0.5 * t);
    b = 2.0 * sh * sh / t2;
  }
  return Mat3::Identity() + a * K + b * K * K;
}

inline double rotation_error(const Mat3& R) {
  return (R.transpose() * R - Mat3::Identity()).norm();
}

/// Logarithm map, returning the rotation vector with angle in [0, pi].
/// Throws ContractViolation if R is not a proper rotation (tolerance 1e-6).
inline Vec3 so3_log(const Mat3& R) {
  if (!R.allFinite() || rotation_error(R) > 1e-6 || std::abs(R.determinant() - 1.0) > 1e-6)
    throw ContractViolation("so3_log: input is not a rotation matrix");

  const Vec3 vee(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
  const double tr = R.trace();
  const double s = 0.5 * vee.norm();
  const double c = std::clamp(0.5 * (tr - 1.0), -1.0, 1.0);
  const double theta = std::atan2(s, c);

  if (theta < detail::kSmallAngle) {
    const double t2 = theta * theta;
    return 0.5 * vee * (1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0);
  }
  if (tr > -1.0 + detail::kLogNearPi) return theta * vee / vee.norm();

  // Near pi: R + R^T = 2 c I + 2 (1 - c) a a^T.
  const Mat3 S = 0.5 * (R + R.transpose());
  const Mat3 aat = (S - c * Mat3::Identity()) / (1.0 - c);
  int i = 0;
  aat.diagonal().maxCoeff(&i);
  Vec3 axis = aat.col(i) / std::sqrt(std::max(aat(i, i), 1e-300));
  axis.normalize();
  if (axis.dot(vee) < 0.0) axis = -axis;
  return theta * axis;
}

/// A(u) with Exp(u + d) ~= Exp(u) (I + skew(A(u)^T d)).
inline Mat3 mat_A(const Vec3& u) {
  const double t2 = u.squaredNorm();
  const Mat3 K = skew(u);
  double b, c;
  if (t2 < detail::kSmallAngle * detail::kSmallAngle) {
    b = 0.5 - t2 / 24.0 + t2 * t2 / 720.0;
    c = 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0;
  } else {
    const double t = std::sqrt(t2);
    const double sh = std::sin(0.5 * t);
    b = 2.0 * sh * sh / t2;
    c = (t - std::sin(t)) / (t2 * t);
  }
  return Mat3::Identity() + b * K + c * K * K;
}

/// Inverse of mat_A, valid for |u| < 2 pi.
inline Mat3 mat_A_inv(const Vec3& u) {
  const double t2 = u.squaredNorm();
  const Mat3 K = skew(u);
  double d;
  if (t2 < detail::kSmallAngle * detail::kSmallAngle) {
    d = 1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0;
  } else {
    const double t = std::sqrt(t2);
    const double alpha = 0.5 * t / std::tan(0.5 * t);
    d = (1.0 - alpha) / t2;
  }
  return Mat3::Identity() - 0.5 * K + d * K * K;
}

/// d((x [+] u) a)/du at u = 0.
inline Mat3 skew_jacobian_lemma2(const Mat3& x, const Vec3& a) { return -x * skew(a); }

/// Pulls R back onto SO(3) after accumulated round-off.
inline Mat3 so3_normalize(const Mat3& R) {
  return Eigen::Quaterniond(R).normalized().toRotationMatrix();
}

}  // namespace ikfom
