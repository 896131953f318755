#pragma once

#include "ikfom/filter.hpp"
#include "ikfom/models/lidar_inertial.hpp"
#include "ikfom/sim/scenario.hpp"

namespace ikfom::sim {

/// Over-parameterized lidar-inertial filter: the whole state lives in R^26,
/// attitude and extrinsic rotation as quaternions [w, x, y, z] and gravity
/// as a free 3-vector. Everything is integrated and corrected additively and
/// projected back onto the constraint sets afterwards; the covariance is
/// left as it is.
namespace quat {

inline constexpr int kP = 0, kV = 3, kQ = 6, kBa = 10, kBw = 13, kG = 16, kQe = 19, kPe = 23, kDim = 26;

using Vec4 = Eigen::Matrix<double, 4, 1>;
using Mat43 = Eigen::Matrix<double, 4, 3>;
using Mat34 = Eigen::Matrix<double, 3, 4>;
using Mat4 = Eigen::Matrix<double, 4, 4>;

struct Context {
  const models::Scan* scan = nullptr;
  bool augmented = false;
  double gravity = 9.81;
};

/// Homogeneous rotation: equals the rotation matrix of q scaled by |q|^2.
inline Mat3 rot(const Vec4& q) {
  const double w = q(0);
  const Vec3 v = q.tail<3>();
  return (w * w - v.squaredNorm()) * Mat3::Identity() + 2.0 * v * v.transpose() + 2.0 * w * skew(v);
}

/// d(rot(q) a)/dq.
inline Mat34 drot(const Vec4& q, const Vec3& a) {
  const double w = q(0);
  const Vec3 v = q.tail<3>();
  Mat34 D;
  D.col(0) = 2.0 * (w * a + v.cross(a));
  D.rightCols<3>() = 2.0 * (v.dot(a) * Mat3::Identity() + v * a.transpose() - a * v.transpose() - w * skew(a));
  return D;
}

/// q (x) [0, phi] = xi(q) phi.
inline Mat43 xi(const Vec4& q) {
  Mat43 X;
  X.row(0) = -q.tail<3>().transpose();
  X.bottomRows<3>() = q(0) * Mat3::Identity() + skew(Vec3(q.tail<3>()));
  return X;
}

/// d(q (x) [0, phi])/dq.
inline Mat4 right_pure(const Vec3& phi) {
  Mat4 M;
  M(0, 0) = 0.0;
  M.block<1, 3>(0, 1) = -phi.transpose();
  M.block<3, 1>(1, 0) = phi;
  M.block<3, 3>(1, 1) = -skew(phi);
  return M;
}

inline Vec4 to_quat(const Mat3& R) {
  const Eigen::Quaterniond q(R);
  return Vec4(q.w(), q.x(), q.y(), q.z());
}

inline Mat3 to_rot(const Vec4& q) { return rot(q.normalized()); }

inline Vec from_state(const models::LidarInertialState& s) {
  Vec x(kDim);
  x << s.p, s.v, to_quat(s.R), s.b_a, s.b_w, s.g, to_quat(s.R_ext), s.p_ext;
  return x;
}

inline models::LidarInertialState to_state(const Vec& x, double gravity) {
  models::LidarInertialState s;
  s.p = x.segment<3>(kP);
  s.v = x.segment<3>(kV);
  s.R = to_rot(x.segment<4>(kQ));
  s.b_a = x.segment<3>(kBa);
  s.b_w = x.segment<3>(kBw);
  s.g = x.segment<3>(kG).normalized() * gravity;
  s.R_ext = to_rot(x.segment<4>(kQe));
  s.p_ext = x.segment<3>(kPe);
  return s;
}

/// Projects quaternions to unit norm and gravity to its known magnitude.
inline void normalize(Vec& x, double gravity) {
  x.segment<4>(kQ).normalize();
  x.segment<4>(kQe).normalize();
  x.segment<3>(kG) = x.segment<3>(kG).normalized() * gravity;
}

/// Linear map from R^26 errors to the 23 minimal coordinates of the
/// on-manifold filter, evaluated at the (normalized) estimate x.
inline Mat to_minimal(const Vec& x) {
  Mat T = Mat::Zero(li::kTangentDim, kDim);
  T.block<3, 3>(0, kP).setIdentity();
  T.block<3, 3>(3, kV).setIdentity();
  T.block<3, 4>(6, kQ) = 2.0 * xi(x.segment<4>(kQ)).transpose();
  T.block<3, 3>(9, kBa).setIdentity();
  T.block<3, 3>(12, kBw).setIdentity();
  const Vec3 g = x.segment<3>(kG);
  T.block<2, 3>(15, kG) = sphere_basis(g).transpose() * skew(g) / g.squaredNorm();
  T.block<3, 4>(17, kQe) = 2.0 * xi(x.segment<4>(kQe)).transpose();
  T.block<3, 3>(20, kPe).setIdentity();
  return T;
}

/// Inverse direction of to_minimal: R^23 errors to R^26 perturbations.
inline Mat from_minimal(const Vec& x) {
  Mat T = Mat::Zero(kDim, li::kTangentDim);
  T.block<3, 3>(kP, 0).setIdentity();
  T.block<3, 3>(kV, 3).setIdentity();
  T.block<4, 3>(kQ, 6) = 0.5 * xi(x.segment<4>(kQ));
  T.block<3, 3>(kBa, 9).setIdentity();
  T.block<3, 3>(kBw, 12).setIdentity();
  const Vec3 g = x.segment<3>(kG);
  T.block<3, 2>(kG, 15) = -skew(g) * sphere_basis(g);
  T.block<4, 3>(kQe, 17) = 0.5 * xi(x.segment<4>(kQe));
  T.block<3, 3>(kPe, 20).setIdentity();
  return T;
}

inline int measurement_rows(const Context& c) { return c.scan->rows() + (c.augmented ? 3 : 0); }

/// Observed measurement vector: zero feature residuals, then the constraint
/// values when the normalization pseudo-measurement is on.
inline Vec observed(const Context& c) {
  Vec z = Vec::Zero(measurement_rows(c));
  if (c.augmented) z.tail<3>() << 1.0, 1.0, c.gravity * c.gravity;
  return z;
}

inline SystemModel<Context> model(double dt, const models::LidarInertialNoise& nz, double norm_sigma) {
  SystemModel<Context> m;
  m.state = Manifold::euclidean(kDim);
  m.dt = dt;
  m.Q = models::lidar_inertial_Q(nz, dt);

  m.f = [](const StatePoint& sx, const Vec& u, const Vec& w) -> Vec {
    const Vec& x = sx.rep;
    const Vec4 q = x.segment<4>(kQ);
    const Vec3 a = u.head<3>() - x.segment<3>(kBa) - w.segment<3>(0);
    const Vec3 om = u.tail<3>() - x.segment<3>(kBw) - w.segment<3>(3);
    Vec d = Vec::Zero(kDim);
    d.segment<3>(kP) = x.segment<3>(kV);
    d.segment<3>(kV) = rot(q) * a + x.segment<3>(kG);
    d.segment<4>(kQ) = 0.5 * xi(q) * om;
    d.segment<3>(kBa) = w.segment<3>(6);
    d.segment<3>(kBw) = w.segment<3>(9);
    return d;
  };

  m.df_dx = [](const StatePoint& sx, const Vec& u) -> Mat {
    const Vec& x = sx.rep;
    const Vec4 q = x.segment<4>(kQ);
    const Vec3 a = u.head<3>() - x.segment<3>(kBa);
    const Vec3 om = u.tail<3>() - x.segment<3>(kBw);
    Mat D = Mat::Zero(kDim, kDim);
    D.block<3, 3>(kP, kV).setIdentity();
    D.block<3, 4>(kV, kQ) = drot(q, a);
    D.block<3, 3>(kV, kBa) = -rot(q);
    D.block<3, 3>(kV, kG).setIdentity();
    D.block<4, 4>(kQ, kQ) = 0.5 * right_pure(om);
    D.block<4, 3>(kQ, kBw) = -0.5 * xi(q);
    return D;
  };

  m.df_dw = [](const StatePoint& sx, const Vec&) -> Mat {
    const Vec4 q = sx.rep.segment<4>(kQ);
    Mat D = Mat::Zero(kDim, li::kNoiseDim);
    D.block<3, 3>(kV, 0) = -rot(q);
    D.block<4, 3>(kQ, 3) = -0.5 * xi(q);
    D.block<3, 3>(kBa, 6).setIdentity();
    D.block<3, 3>(kBw, 9).setIdentity();
    return D;
  };

  m.h = [](const StatePoint& sx, const Vec& v, const Context& c) -> Vec {
    const auto& scan = *c.scan;
    if (scan.features.empty()) throw ContractViolation("lidar update rejected: empty feature list");
    const Vec& x = sx.rep;
    const Mat3 R = rot(x.segment<4>(kQ)), Re = rot(x.segment<4>(kQe));
    Vec z(measurement_rows(c));
    int row = 0, k = 0;
    for (const auto& ft : scan.features) {
      const Vec3 pf = ft.p_f - v.segment<3>(3 * k);
      z.segment(row, ft.rows()) = ft.G() * (R * (Re * pf + x.segment<3>(kPe)) + x.segment<3>(kP) - ft.q);
      row += ft.rows();
      ++k;
    }
    if (c.augmented) {
      const int o = 3 * k;
      z(row) = x.segment<4>(kQ).squaredNorm() + v(o);
      z(row + 1) = x.segment<4>(kQe).squaredNorm() + v(o + 1);
      z(row + 2) = x.segment<3>(kG).squaredNorm() + v(o + 2);
    }
    return z;
  };

  m.dh_dx = [](const StatePoint& sx, const Context& c) -> Mat {
    const Vec& x = sx.rep;
    const Vec4 q = x.segment<4>(kQ), qe = x.segment<4>(kQe);
    const Mat3 R = rot(q), Re = rot(qe);
    Mat H = Mat::Zero(measurement_rows(c), kDim);
    int row = 0;
    for (const auto& ft : c.scan->features) {
      const Mat G = ft.G();
      const int r = ft.rows();
      H.block(row, kP, r, 3) = G;
      H.block(row, kQ, r, 4) = G * drot(q, Re * ft.p_f + x.segment<3>(kPe));
      H.block(row, kQe, r, 4) = G * R * drot(qe, ft.p_f);
      H.block(row, kPe, r, 3) = G * R;
      row += r;
    }
    if (c.augmented) {
      H.block<1, 4>(row, kQ) = 2.0 * q.transpose();
      H.block<1, 4>(row + 1, kQe) = 2.0 * qe.transpose();
      H.block<1, 3>(row + 2, kG) = 2.0 * x.segment<3>(kG).transpose();
    }
    return H;
  };

  m.dh_dv = [](const StatePoint& sx, const Context& c) -> Mat {
    const Vec& x = sx.rep;
    const Mat3 RRe = rot(x.segment<4>(kQ)) * rot(x.segment<4>(kQe));
    const int nf = static_cast<int>(c.scan->features.size());
    const int extra = c.augmented ? 3 : 0;
    Mat D = Mat::Zero(measurement_rows(c), 3 * nf + extra);
    int row = 0, k = 0;
    for (const auto& ft : c.scan->features) {
      D.block(row, 3 * k, ft.rows(), 3) = -ft.G() * RRe;
      row += ft.rows();
      ++k;
    }
    if (extra) D.bottomRightCorner(3, 3).setIdentity();
    return D;
  };

  m.R = [sf = nz.sigma_feature, norm_sigma](const Context& c) -> Mat {
    const int p = 3 * static_cast<int>(c.scan->features.size());
    const int extra = c.augmented ? 3 : 0;
    Mat R = Mat::Zero(p + extra, p + extra);
    R.topLeftCorner(p, p).diagonal().setConstant(sf * sf);
    if (extra) {
      R(p, p) = R(p + 1, p + 1) = norm_sigma * norm_sigma;
      R(p + 2, p + 2) = std::pow(2.0 * c.gravity * c.gravity * norm_sigma, 2);
    }
    return R;
  };
  return m;
}

}  // namespace quat
}  // namespace ikfom::sim
