#pragma once

#include <functional>
#include <utility>

#include "ikfom/filter.hpp"
#include "ikfom/system_model.hpp"

namespace ikfom::models {

/// Continuous-time dynamics of one state factor, already in the form used by
/// the zero-order-hold step x_{k+1} = x_k [+] (dt f(x_k, u_k, w_k)).
struct Block {
  Manifold manifold = Manifold::euclidean(1);
  int input_dim = 0;
  int noise_dim = 0;
  std::function<Vec(const StatePoint& x, const Vec& u, const Vec& w)> f;
  std::function<Mat(const StatePoint& x, const Vec& u)> df_dx;
  std::function<Mat(const StatePoint& x, const Vec& u)> df_dw;

  /// One noiseless zero-order-hold step.
  StatePoint step(const StatePoint& x, const Vec& u, double dt) const {
    return oplus(manifold, x, dt * f(x, u, Vec::Zero(noise_dim)));
  }

  /// Wraps the block as a process-only system model with noise covariance Q.
  SystemModel<> as_model(double dt, Mat Q) const {
    SystemModel<> m;
    m.state = manifold;
    m.dt = dt;
    m.f = f;
    m.df_dx = df_dx;
    m.df_dw = df_dw;
    m.Q = std::move(Q);
    return m;
  }
};

/// x in R^n with x' = f(x, u, w).
inline Block block_euclidean(int n, int input_dim, int noise_dim,
                             std::function<Vec(const Vec&, const Vec&, const Vec&)> f_cont,
                             std::function<Mat(const Vec&, const Vec&)> df_dx_cont,
                             std::function<Mat(const Vec&, const Vec&)> df_dw_cont) {
  Block b;
  b.manifold = Manifold::euclidean(n);
  b.input_dim = input_dim;
  b.noise_dim = noise_dim;
  b.f = [f = std::move(f_cont)](const StatePoint& x, const Vec& u, const Vec& w) { return f(x.rep, u, w); };
  b.df_dx = [d = std::move(df_dx_cont)](const StatePoint& x, const Vec& u) { return d(x.rep, u); };
  b.df_dw = [d = std::move(df_dw_cont)](const StatePoint& x, const Vec& u) { return d(x.rep, u); };
  return b;
}

/// Attitude driven by an angular rate expressed in the global frame (input u = omega_G).
inline Block block_attitude_global() {
  Block b;
  b.manifold = Manifold::so3();
  b.input_dim = b.noise_dim = 3;
  b.f = [](const StatePoint& x, const Vec& u, const Vec& w) -> Vec {
    return rot_from_rep(x.rep).transpose() * Vec3(u + w);
  };
  b.df_dx = [](const StatePoint& x, const Vec& u) -> Mat { return skew(rot_from_rep(x.rep).transpose() * Vec3(u)); };
  b.df_dw = [](const StatePoint& x, const Vec&) -> Mat { return rot_from_rep(x.rep).transpose(); };
  return b;
}

/// Attitude driven by a body-frame angular rate (input u = omega_B).
inline Block block_attitude_body() {
  Block b;
  b.manifold = Manifold::so3();
  b.input_dim = b.noise_dim = 3;
  b.f = [](const StatePoint&, const Vec& u, const Vec& w) -> Vec { return u + w; };
  b.df_dx = [](const StatePoint&, const Vec&) -> Mat { return Mat::Zero(3, 3); };
  b.df_dw = [](const StatePoint&, const Vec&) -> Mat { return Mat::Identity(3, 3); };
  return b;
}

/// Constant vector of known length held in the global frame.
inline Block block_gravity_global(double magnitude) {
  Block b;
  b.manifold = Manifold::sphere2(magnitude);
  b.f = [](const StatePoint&, const Vec&, const Vec&) -> Vec { return Vec::Zero(3); };
  b.df_dx = [](const StatePoint&, const Vec&) -> Mat { return Mat::Zero(3, 2); };
  b.df_dw = [](const StatePoint&, const Vec&) -> Mat { return Mat::Zero(3, 0); };
  return b;
}

/// Constant global vector of known length seen from a rotating body (input u = omega_B).
inline Block block_gravity_body(double magnitude) {
  Block b;
  b.manifold = Manifold::sphere2(magnitude);
  b.input_dim = b.noise_dim = 3;
  b.f = [](const StatePoint&, const Vec& u, const Vec& w) -> Vec { return -(u + w); };
  b.df_dx = [](const StatePoint&, const Vec&) -> Mat { return Mat::Zero(3, 2); };
  b.df_dw = [](const StatePoint&, const Vec&) -> Mat { return -Mat::Identity(3, 3); };
  return b;
}

/// Depth parameterization d(rho) with its first two derivatives.
struct DepthParam {
  std::function<double(double)> d = [](double rho) { return rho; };
  std::function<double(double)> dd = [](double) { return 1.0; };
  std::function<double(double)> ddd = [](double) { return 0.0; };
};

/// Bearing x in S^2(1) and depth parameter rho of a landmark seen by a moving
/// camera. State S^2(1) x R, inputs [omega_C, v_C], noise on both inputs.
inline Block block_bearing_landmark(DepthParam dp = {}) {
  Block b;
  b.manifold = Manifold::compound({Manifold::sphere2(1.0), Manifold::euclidean(1)});
  b.input_dim = b.noise_dim = 6;
  b.f = [dp](const StatePoint& x, const Vec& u, const Vec& w) -> Vec {
    const Vec3 br(x.rep.head<3>());
    const double rho = x.rep(3);
    const Vec3 om = u.head<3>() + w.head<3>(), v = u.tail<3>() + w.tail<3>();
    Vec out(4);
    out.head<3>() = -om - br.cross(v) / dp.d(rho);
    out(3) = -br.dot(v) / dp.dd(rho);
    return out;
  };
  b.df_dx = [dp](const StatePoint& x, const Vec& u) -> Mat {
    const Vec3 br(x.rep.head<3>());
    const double rho = x.rep(3), d = dp.d(rho), d1 = dp.dd(rho), d2 = dp.ddd(rho);
    const Vec3 v = u.tail<3>();
    const Mat32 M = sphere_M(br, Vec2::Zero());
    Mat D = Mat::Zero(4, 3);
    D.block<3, 2>(0, 0) = skew(v) * M / d;
    D.block<3, 1>(0, 2) = br.cross(v) * d1 / (d * d);
    D.block<1, 2>(3, 0) = -v.transpose() * M / d1;
    D(3, 2) = br.dot(v) * d2 / (d1 * d1);
    return D;
  };
  b.df_dw = [dp](const StatePoint& x, const Vec&) -> Mat {
    const Vec3 br(x.rep.head<3>());
    const double rho = x.rep(3);
    Mat D = Mat::Zero(4, 6);
    D.block<3, 3>(0, 0) = -Mat3::Identity();
    D.block<3, 3>(0, 3) = -skew(br) / dp.d(rho);
    D.block<1, 3>(3, 3) = -br.transpose() / dp.dd(rho);
    return D;
  };
  return b;
}

}  // namespace ikfom::models
