#pragma once

#include <string>
#include <vector>

#include "ikfom/filter.hpp"
#include "ikfom/system_model.hpp"

namespace ikfom::models {

enum class FeatureKind { Plane, Edge };

/// A lidar point with its associated map primitive: the plane normal (or
/// edge direction) u through the global anchor q.
struct Feature {
  Vec3 p_f;  // point in the lidar frame (m)
  Vec3 u;    // unit normal or direction
  Vec3 q;    // anchor on the plane or edge, global frame (m)
  FeatureKind kind = FeatureKind::Plane;

  int rows() const { return kind == FeatureKind::Plane ? 1 : 3; }
  Eigen::MatrixXd G() const {
    if (kind == FeatureKind::Plane) return u.transpose();
    return skew(u);
  }
};

struct Scan {
  std::vector<Feature> features;

  int rows() const {
    int r = 0;
    for (const auto& f : features) r += f.rows();
    return r;
  }
};

/// Factor layout of the lidar-inertial state.
namespace li {
inline constexpr int kP = 0, kV = 1, kR = 2, kBa = 3, kBw = 4, kG = 5, kRext = 6, kPext = 7;
inline constexpr int kTangentDim = 23, kControlDim = 24, kRepDim = 36, kNoiseDim = 12;
inline const char* const kBlockNames[] = {"p", "v", "R", "b_a", "b_w", "g", "R_ext", "p_ext"};
}  // namespace li

struct LidarInertialState {
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Mat3 R = Mat3::Identity();
  Vec3 b_a = Vec3::Zero();
  Vec3 b_w = Vec3::Zero();
  Vec3 g = Vec3(0, 0, -9.81);
  Mat3 R_ext = Mat3::Identity();
  Vec3 p_ext = Vec3::Zero();
};

inline Manifold lidar_inertial_manifold(double gravity = 9.81) {
  const auto r3 = Manifold::euclidean(3);
  return Manifold::compound({r3, r3, Manifold::so3(), r3, r3, Manifold::sphere2(gravity), Manifold::so3(), r3});
}

inline StatePoint pack(const LidarInertialState& s) {
  StatePoint x(Vec(li::kRepDim));
  x.rep.segment<3>(0) = s.p;
  x.rep.segment<3>(3) = s.v;
  rot_to_rep(s.R, x.rep.segment(6, 9));
  x.rep.segment<3>(15) = s.b_a;
  x.rep.segment<3>(18) = s.b_w;
  x.rep.segment<3>(21) = s.g;
  rot_to_rep(s.R_ext, x.rep.segment(24, 9));
  x.rep.segment<3>(33) = s.p_ext;
  return x;
}

inline LidarInertialState unpack(const StatePoint& x) {
  LidarInertialState s;
  s.p = x.rep.segment<3>(0);
  s.v = x.rep.segment<3>(3);
  s.R = rot_from_rep(x.rep.segment(6, 9));
  s.b_a = x.rep.segment<3>(15);
  s.b_w = x.rep.segment<3>(18);
  s.g = x.rep.segment<3>(21);
  s.R_ext = rot_from_rep(x.rep.segment(24, 9));
  s.p_ext = x.rep.segment<3>(33);
  return s;
}

/// Noise levels. sigma_a / sigma_w are per-sample standard deviations of the
/// IMU readings; the bias terms are random-walk densities (per sqrt(s)).
struct LidarInertialNoise {
  double sigma_a = 0.05;
  double sigma_w = 0.005;
  double sigma_ba = 1e-3;
  double sigma_bw = 1e-4;
  double sigma_feature = 0.02;
};

/// Process noise covariance for the noise vector [n_a, n_w, n_ba, n_bw].
inline Mat lidar_inertial_Q(const LidarInertialNoise& nz, double dt) {
  Vec q(li::kNoiseDim);
  q << Vec3::Constant(nz.sigma_a * nz.sigma_a), Vec3::Constant(nz.sigma_w * nz.sigma_w),
      Vec3::Constant(nz.sigma_ba * nz.sigma_ba / dt), Vec3::Constant(nz.sigma_bw * nz.sigma_bw / dt);
  return q.asDiagonal();
}

/// Point-to-plane (or point-to-edge) residual of one feature.
inline Vec feature_residual(const LidarInertialState& s, const Feature& ft, const Vec3& noise = Vec3::Zero()) {
  const Vec3 pw = s.R * (s.R_ext * (ft.p_f - noise) + s.p_ext) + s.p - ft.q;
  return ft.G() * pw;
}

/// Inertial navigation with online lidar extrinsics. Inputs u = [a_m, w_m];
/// noise w = [n_a, n_w, n_ba, n_bw]; the measurement is the stacked feature
/// residuals, whose observed value is always zero.
inline SystemModel<Scan> lidar_inertial_model(double dt, const LidarInertialNoise& nz = {}, double gravity = 9.81) {
  if (!(dt > 0.0)) throw ContractViolation("lidar_inertial_model: dt must be positive");
  SystemModel<Scan> m;
  m.state = lidar_inertial_manifold(gravity);
  m.dt = dt;
  m.Q = lidar_inertial_Q(nz, dt);

  m.f = [](const StatePoint& x, const Vec& u, const Vec& w) -> Vec {
    const auto s = unpack(x);
    Vec out = Vec::Zero(li::kControlDim);
    out.segment<3>(0) = s.v;
    out.segment<3>(3) = s.R * (u.head<3>() - s.b_a - w.segment<3>(0)) + s.g;
    out.segment<3>(6) = u.tail<3>() - s.b_w - w.segment<3>(3);
    out.segment<3>(9) = w.segment<3>(6);
    out.segment<3>(12) = w.segment<3>(9);
    return out;
  };

  m.df_dx = [](const StatePoint& x, const Vec& u) -> Mat {
    const auto s = unpack(x);
    Mat D = Mat::Zero(li::kControlDim, li::kTangentDim);
    D.block<3, 3>(0, 3).setIdentity();
    D.block<3, 3>(3, 6) = -s.R * skew(Vec3(u.head<3>()) - s.b_a);
    D.block<3, 3>(3, 9) = -s.R;
    D.block<3, 2>(3, 15) = -skew(s.g) * sphere_basis(s.g);
    D.block<3, 3>(6, 12) = -Mat3::Identity();
    return D;
  };

  m.df_dw = [](const StatePoint& x, const Vec&) -> Mat {
    const auto s = unpack(x);
    Mat D = Mat::Zero(li::kControlDim, li::kNoiseDim);
    D.block<3, 3>(3, 0) = -s.R;
    D.block<3, 3>(6, 3) = -Mat3::Identity();
    D.block<3, 3>(9, 6).setIdentity();
    D.block<3, 3>(12, 9).setIdentity();
    return D;
  };

  m.h = [](const StatePoint& x, const Vec& v, const Scan& scan) -> Vec {
    if (scan.features.empty()) throw ContractViolation("lidar update rejected: empty feature list");
    const auto s = unpack(x);
    Vec z(scan.rows());
    int row = 0, k = 0;
    for (const auto& ft : scan.features) {
      z.segment(row, ft.rows()) = feature_residual(s, ft, Vec3(v.segment<3>(3 * k)));
      row += ft.rows();
      ++k;
    }
    return z;
  };

  m.dh_dx = [](const StatePoint& x, const Scan& scan) -> Mat {
    const auto s = unpack(x);
    Mat H = Mat::Zero(scan.rows(), li::kTangentDim);
    int row = 0;
    for (const auto& ft : scan.features) {
      const Mat G = ft.G();
      const int r = ft.rows();
      const Mat GR = G * s.R;
      H.block(row, 0, r, 3) = G;
      H.block(row, 6, r, 3) = -GR * skew(s.R_ext * ft.p_f + s.p_ext);
      H.block(row, 17, r, 3) = -GR * s.R_ext * skew(ft.p_f);
      H.block(row, 20, r, 3) = GR;
      row += r;
    }
    return H;
  };

  m.dh_dv = [](const StatePoint& x, const Scan& scan) -> Mat {
    const auto s = unpack(x);
    Mat D = Mat::Zero(scan.rows(), 3 * static_cast<int>(scan.features.size()));
    int row = 0, k = 0;
    for (const auto& ft : scan.features) {
      D.block(row, 3 * k, ft.rows(), 3) = -ft.G() * s.R * s.R_ext;
      row += ft.rows();
      ++k;
    }
    return D;
  };

  m.R = [sf = nz.sigma_feature](const Scan& scan) -> Mat {
    const int p = 3 * static_cast<int>(scan.features.size());
    return Mat::Identity(p, p) * sf * sf;
  };
  return m;
}

}  // namespace ikfom::models
