#pragma once

#include <cmath>

#include <Eigen/Core>

#include "ikfom/errors.hpp"
#include "ikfom/so3.hpp"

namespace ikfom {

using Vec2 = Eigen::Vector2d;
using Mat32 = Eigen::Matrix<double, 3, 2>;
using Mat23 = Eigen::Matrix<double, 2, 3>;
using Row3 = Eigen::Matrix<double, 1, 3>;

namespace detail {

inline constexpr double kSeries = 1e-2;
inline constexpr double kCutLocus = 1e-8;

// theta / s for theta = atan2(s, c).
inline double theta_over_s(double s, double c) {
  if (c > 0.0 && s < kSeries * c) {
    const double t2 = (s / c) * (s / c);
    return (1.0 - t2 / 3.0 + t2 * t2 / 5.0 - t2 * t2 * t2 / 7.0) / c;
  }
  return std::atan2(s, c) / s;
}

// (D theta - c s) / s^3 with D = s^2 + c^2.
inline double p_coefficient(double s, double c) {
  if (c > 0.0 && s < kSeries * c) {
    const double t2 = (s / c) * (s / c);
    return (2.0 / 3.0 - 2.0 * t2 / 15.0 + 2.0 * t2 * t2 / 35.0) / c;
  }
  const double D = s * s + c * c;
  return (D * std::atan2(s, c) - c * s) / (s * s * s);
}

inline void check_not_antipodal(double s, double c, double r2) {
  if (c < 0.0 && s < kCutLocus * r2)
    throw SingularityError("boxminus undefined at cut locus");
}

}  // namespace detail

/// Orthonormal tangent basis at x: the canonical axis e_i with the largest
/// component of x is rotated onto x along the geodesic and carries the
/// other two axes (in cyclic order) with it.
inline Mat32 sphere_basis(const Vec3& x) {
  int i = 0;
  for (int k = 1; k < 3; ++k)
    if (x(k) > x(i)) i = k;
  const int j = (i + 1) % 3, k = (i + 2) % 3;

  const Vec3 xn = x.normalized();
  const Vec3 axis = Vec3::Unit(i).cross(xn);
  const double s = axis.norm();
  const double c = xn(i);
  const Mat3 R = so3_exp(axis * detail::theta_over_s(s, c));

  Mat32 B;
  B.col(0) = R.col(j);
  B.col(1) = R.col(k);
  return B;
}

inline Vec3 sphere_boxplus(const Vec3& x, const Vec2& u) {
  const Vec3 y = so3_exp(sphere_basis(x) * u) * x;
  return y * (x.norm() / y.norm());
}

inline Vec3 sphere_oplus(const Vec3& x, const Vec3& v) {
  const Vec3 y = so3_exp(v) * x;
  return y * (x.norm() / y.norm());
}

/// y [-] x. Throws SingularityError when y is (numerically) antipodal to x.
inline Vec2 sphere_boxminus(const Vec3& y, const Vec3& x) {
  const Vec3 xy = x.cross(y);
  const double s = xy.norm();
  const double c = x.dot(y);
  detail::check_not_antipodal(s, c, x.squaredNorm());
  return sphere_basis(x).transpose() * (detail::theta_over_s(s, c) * xy);
}

/// P(x, y) = d(theta/s)/dx, theta = atan2(|y x x|, y.x).
inline Row3 sphere_P(const Vec3& x, const Vec3& y) {
  const Mat3 Ky = skew(y);
  const double s = (Ky * x).norm();
  const double c = y.dot(x);
  detail::check_not_antipodal(s, c, y.squaredNorm());
  const double D = s * s + c * c;
  return (detail::p_coefficient(s, c) * x.transpose() * Ky * Ky - y.transpose()) / D;
}

/// N(x, y) = d(x [-] y)/dx.
inline Mat23 sphere_N(const Vec3& x, const Vec3& y) {
  const Mat3 Ky = skew(y);
  const Vec3 yx = Ky * x;
  const double s = yx.norm();
  const double c = y.dot(x);
  detail::check_not_antipodal(s, c, y.squaredNorm());
  const Mat3 inner = detail::theta_over_s(s, c) * Ky + yx * sphere_P(x, y);
  return sphere_basis(y).transpose() * inner;
}

/// M(x, u) = d(x [+] u)/du.
inline Mat32 sphere_M(const Vec3& x, const Vec2& u) {
  const Mat32 B = sphere_basis(x);
  const Vec3 w = B * u;
  return -so3_exp(w) * skew(x) * mat_A(w).transpose() * B;
}

}  // namespace ikfom
