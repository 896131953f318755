#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "ikfom/models/lidar_inertial.hpp"
#include "ikfom/sim/scenario.hpp"

namespace ikfom::sim {

struct Plane {
  Vec3 normal;
  double offset;  // plane is { x : normal . x = offset }
};

/// Ground truth, IMU readings and lidar scans of one scenario.
/// truth[k] is the state at t = k dt; u_true[k] / u_meas[k] drive the step
/// k -> k+1; scans[k] is observed at truth[k] and is empty on steps without a
/// lidar update.
struct Trajectory {
  std::vector<models::LidarInertialState> truth;
  std::vector<Vec> u_true;
  std::vector<Vec> u_meas;
  std::vector<models::Scan> scans;
  std::vector<Plane> planes;
  models::LidarInertialState initial_estimate;
  Mat P0;
  double peak_rate = 0.0;  // max |omega| over the generated steps (rad/s)
};

namespace detail {

inline Vec gaussian(std::mt19937_64& rng, int n, double sigma) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = sigma * nd(rng);
  return v;
}

inline Vec3 random_unit(std::mt19937_64& rng) {
  Vec3 v;
  do v = gaussian(rng, 3, 1.0); while (v.norm() < 1e-6);
  return v.normalized();
}

inline Vec3 body_rate(const ScenarioConfig& cfg, double t) {
  switch (cfg.trajectory) {
    case TrajectoryKind::Static:
      return Vec3::Zero();
    case TrajectoryKind::Circle:
      return Vec3(0.6 * std::sin(1.3 * t), 0.5 * std::cos(0.9 * t), 0.4 + 0.2 * std::sin(0.5 * t));
    case TrajectoryKind::FastRotation: {
      const Vec3 axis = Vec3(std::cos(0.3 * t), std::sin(0.7 * t), 0.5).normalized();
      return cfg.peak_rate * std::sin(std::numbers::pi * t) * axis;
    }
  }
  return Vec3::Zero();
}

inline Vec3 velocity(const ScenarioConfig& cfg, double t) {
  switch (cfg.trajectory) {
    case TrajectoryKind::Static:
      return Vec3::Zero();
    case TrajectoryKind::Circle: {
      const double r = 3.0, w = 0.5;
      return Vec3(-r * w * std::sin(w * t), r * w * std::cos(w * t), 0.3 * std::cos(0.8 * t));
    }
    case TrajectoryKind::FastRotation:
      return Vec3(0.5 * std::sin(1.1 * t), 0.4 * std::sin(0.7 * t), 0.2 * std::sin(1.7 * t));
  }
  return Vec3::Zero();
}

inline Vec initial_sigmas(const InitialSigma& s) {
  Vec d(li::kTangentDim);
  d << Vec3::Constant(s.p), Vec3::Constant(s.v), Vec3::Constant(s.R), Vec3::Constant(s.b_a), Vec3::Constant(s.b_w),
      Vec2::Constant(s.g), Vec3::Constant(s.R_ext), Vec3::Constant(s.p_ext);
  return d;
}

inline models::Scan make_scan(std::mt19937_64& rng, const std::vector<Plane>& planes, const models::LidarInertialState& s,
                              int count, double sigma_f) {
  std::uniform_int_distribution<std::size_t> pick(0, planes.size() - 1);
  std::uniform_real_distribution<double> radius(0.0, 5.0), angle(0.0, 2.0 * std::numbers::pi);
  models::Scan scan;
  scan.features.reserve(count);
  for (int i = 0; i < count; ++i) {
    const Plane& pl = planes[pick(rng)];
    const Vec3 foot = s.p - (pl.normal.dot(s.p) - pl.offset) * pl.normal;
    const Mat32 tb = sphere_basis(pl.normal);
    const double a = angle(rng), r = radius(rng);
    const Vec3 pw = foot + r * (std::cos(a) * tb.col(0) + std::sin(a) * tb.col(1));
    models::Feature f;
    f.p_f = s.R_ext.transpose() * (s.R.transpose() * (pw - s.p) - s.p_ext) + gaussian(rng, 3, sigma_f);
    f.u = pl.normal;
    f.q = pl.offset * pl.normal;
    f.kind = models::FeatureKind::Plane;
    scan.features.push_back(f);
  }
  return scan;
}

}  // namespace detail

/// Builds a scenario deterministically from cfg.seed. The true state follows
/// the same discrete dynamics the filter uses; the estimate starts at an
/// error drawn from the initial covariance.
inline Trajectory generate_trajectory(const ScenarioConfig& cfg) {
  cfg.validate();
  using detail::gaussian;
  std::mt19937_64 rng(cfg.seed);
  const int K = cfg.steps();
  const auto& nz = cfg.noise;
  const auto model = models::lidar_inertial_model(cfg.dt, nz);
  const Manifold& m = model.state;

  Trajectory tr;
  tr.planes.resize(cfg.planes);
  std::uniform_real_distribution<double> offset(4.0, 10.0);
  for (auto& pl : tr.planes) {
    pl.normal = detail::random_unit(rng);
    pl.offset = offset(rng);
  }

  models::LidarInertialState x0;
  x0.v = detail::velocity(cfg, 0.0);
  x0.R = so3_exp(Vec3(0.0, 0.0, 0.3));
  x0.b_a = gaussian(rng, 3, cfg.init.b_a);
  x0.b_w = gaussian(rng, 3, cfg.init.b_w);
  x0.R_ext = so3_exp(Vec3(0.05, -0.1, 0.15));
  x0.p_ext = Vec3(0.1, 0.05, -0.08);

  const Vec sig = detail::initial_sigmas(cfg.init);
  tr.P0 = sig.array().square().matrix().asDiagonal();
  Vec delta(sig.size());
  for (Eigen::Index i = 0; i < sig.size(); ++i) delta(i) = sig(i) * gaussian(rng, 1, 1.0)(0);
  tr.initial_estimate = models::unpack(boxplus(m, models::pack(x0), -delta));

  tr.truth.reserve(K + 1);
  tr.u_true.reserve(K);
  tr.u_meas.reserve(K);
  tr.scans.resize(K + 1);
  tr.truth.push_back(x0);

  const double sqdt = std::sqrt(cfg.dt);
  const Vec w_zero = Vec::Zero(li::kNoiseDim);
  StatePoint x = models::pack(x0);
  for (int k = 0; k < K; ++k) {
    const auto s = models::unpack(x);
    const double t = k * cfg.dt;
    const Vec3 omega = detail::body_rate(cfg, t);
    tr.peak_rate = std::max(tr.peak_rate, omega.norm());
    const Vec3 acc = s.R.transpose() * ((detail::velocity(cfg, t + cfg.dt) - s.v) / cfg.dt - s.g);

    Vec u(6);
    u << acc + s.b_a, omega + s.b_w;
    Vec um(6);
    um << u.head<3>() + gaussian(rng, 3, nz.sigma_a), u.tail<3>() + gaussian(rng, 3, nz.sigma_w);
    tr.u_true.push_back(u);
    tr.u_meas.push_back(um);

    Vec w = w_zero;
    w.segment<3>(6) = gaussian(rng, 3, nz.sigma_ba / sqdt);
    w.segment<3>(9) = gaussian(rng, 3, nz.sigma_bw / sqdt);
    x = oplus(m, x, cfg.dt * model.f(x, u, w));
    tr.truth.push_back(models::unpack(x));

    if ((k + 1) % cfg.meas_every == 0)
      tr.scans[k + 1] = detail::make_scan(rng, tr.planes, tr.truth.back(), cfg.features, nz.sigma_feature);
  }
  return tr;
}

}  // namespace ikfom::sim
