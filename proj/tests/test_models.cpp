#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "ikfom/models/blocks.hpp"
#include "ikfom/models/lidar_inertial.hpp"
#include "oracles.hpp"

using namespace ikfom;
using namespace ikfom::models;
using oracle::jacobian_close;
using oracle::numeric_jacobian;

namespace {

constexpr double kPi = std::numbers::pi;

Block pendulum() {
  return block_euclidean(
      2, 1, 1,
      [](const Vec& x, const Vec& u, const Vec& w) -> Vec {
        Vec d(2);
        d << x(1), -std::sin(x(0)) + u(0) + w(0);
        return d;
      },
      [](const Vec& x, const Vec&) -> Mat {
        Mat D(2, 2);
        D << 0, 1, -std::cos(x(0)), 0;
        return D;
      },
      [](const Vec&, const Vec&) -> Mat {
        Mat D = Mat::Zero(2, 1);
        D(1, 0) = 1;
        return D;
      });
}

Vec rk4(const Block& b, Vec x, const Vec& u, double T, int substeps) {
  const double h = T / substeps;
  const Vec w = Vec::Zero(b.noise_dim);
  const auto f = [&](const Vec& y) { return b.f(StatePoint(y), u, w); };
  for (int i = 0; i < substeps; ++i) {
    const Vec k1 = f(x), k2 = f(x + 0.5 * h * k1), k3 = f(x + 0.5 * h * k2), k4 = f(x + h * k3);
    x += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return x;
}

void check_block_jacobians(const Block& b, std::mt19937_64& rng, int points,
                           const std::function<StatePoint(std::mt19937_64&)>& sample = {}) {
  for (int i = 0; i < points; ++i) {
    const StatePoint x = sample ? sample(rng) : oracle::random_point(b.manifold, rng);
    const Vec u = oracle::gaussian(rng, b.input_dim, 2.0);
    const Vec w0 = Vec::Zero(b.noise_dim);
    const auto gx = [&](const Vec& d) -> Vec { return b.f(boxplus(b.manifold, x, d), u, w0); };
    const auto gw = [&](const Vec& w) -> Vec { return b.f(x, u, w); };
    EXPECT_TRUE(jacobian_close(b.df_dx(x, u), numeric_jacobian(gx, zero_tangent(b.manifold))));
    if (b.noise_dim > 0) EXPECT_TRUE(jacobian_close(b.df_dw(x, u), numeric_jacobian(gw, w0)));
  }
}

LidarInertialState random_li_state(std::mt19937_64& rng) {
  LidarInertialState s;
  s.p = oracle::gaussian(rng, 3, 2.0);
  s.v = oracle::gaussian(rng, 3, 1.0);
  s.R = oracle::random_rotation(rng);
  s.b_a = oracle::gaussian(rng, 3, 0.1);
  s.b_w = oracle::gaussian(rng, 3, 0.01);
  s.g = oracle::unit_vector(rng) * 9.81;
  s.R_ext = oracle::random_rotation(rng);
  s.p_ext = oracle::gaussian(rng, 3, 0.3);
  return s;
}

Scan random_scan(std::mt19937_64& rng, const LidarInertialState& s, int count, bool edges) {
  Scan sc;
  for (int i = 0; i < count; ++i) {
    Feature f;
    f.kind = (edges && i % 2) ? FeatureKind::Edge : FeatureKind::Plane;
    f.u = oracle::unit_vector(rng);
    f.p_f = oracle::gaussian(rng, 3, 4.0);
    const Vec3 pw = s.R * (s.R_ext * f.p_f + s.p_ext) + s.p;
    Vec3 t = oracle::unit_vector(rng);
    if (f.kind == FeatureKind::Plane) t = (t - t.dot(f.u) * f.u).normalized();
    else t = f.u;
    f.q = pw + oracle::gaussian(rng, 1, 2.0)(0) * t + oracle::gaussian(rng, 3, 0.05);
    sc.features.push_back(f);
  }
  return sc;
}

}  // namespace

TEST(EuclideanBlock, ConstantVelocityPoint) {
  const auto b = block_euclidean(
      3, 3, 0, [](const Vec&, const Vec& u, const Vec&) -> Vec { return u; },
      [](const Vec&, const Vec&) -> Mat { return Mat::Zero(3, 3); }, [](const Vec&, const Vec&) -> Mat { return Mat::Zero(3, 0); });
  Vec x0(3), v(3);
  x0 << 1, 2, 3;
  v << 0.5, -1, 2;
  EXPECT_LT((b.step(StatePoint(x0), v, 0.1).rep - (x0 + 0.1 * v)).norm(), 1e-15);
  EXPECT_EQ(b.step(StatePoint(x0), Vec::Zero(3), 0.1).rep, x0);
}

TEST(EuclideanBlock, LocalErrorIsSecondOrder) {
  const auto b = pendulum();
  Vec x0(2);
  x0 << 1.0, 0.3;
  const Vec u = Vec::Zero(1);
  double prev = 0;
  for (double dt : {0.02, 0.01, 0.005, 0.0025}) {
    const double err = (b.step(StatePoint(x0), u, dt).rep - rk4(b, x0, u, dt, 64)).norm();
    EXPECT_LT(err, 1.0 * dt * dt);
    if (prev > 0) {
      EXPECT_GT(prev / err, 3.5);
      EXPECT_LT(prev / err, 4.5);
    }
    prev = err;
  }
}

TEST(EuclideanBlock, JacobiansMatchFiniteDifference) {
  std::mt19937_64 rng(1);
  check_block_jacobians(pendulum(), rng, 500);
}

TEST(AttitudeBlocks, ZeroRateKeepsAttitude) {
  std::mt19937_64 rng(2);
  const auto x = oracle::random_point(Manifold::so3(), rng);
  EXPECT_EQ(block_attitude_body().step(x, Vec::Zero(3), 0.01).rep, x.rep);
  EXPECT_EQ(block_attitude_global().step(x, Vec::Zero(3), 0.01).rep, x.rep);
}

TEST(AttitudeBlocks, QuarterTurnYawInOneStep) {
  const double dt = 0.01;
  StatePoint x(Vec(9));
  rot_to_rep(Mat3::Identity(), x.rep);
  Vec w(3);
  w << 0, 0, kPi / (2 * dt);
  const Mat3 R = rot_from_rep(block_attitude_body().step(x, w, dt).rep);
  EXPECT_LT((R - oracle::rodrigues(Vec3(0, 0, kPi / 2))).norm(), 1e-14);
  Mat3 expected;
  expected << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  EXPECT_LT((R - expected).norm(), 1e-14);
}

TEST(AttitudeBlocks, GlobalAndBodyRatesAgree) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const auto x = oracle::random_point(Manifold::so3(), rng);
    const Vec3 wb = oracle::gaussian(rng, 3, 3.0);
    const Vec wg = rot_from_rep(x.rep) * wb;
    const auto a = block_attitude_body().step(x, Vec(wb), 0.01);
    const auto b = block_attitude_global().step(x, wg, 0.01);
    EXPECT_LT((a.rep - b.rep).norm(), 1e-12);
  }
}

TEST(AttitudeBlocks, JacobiansMatchFiniteDifference) {
  std::mt19937_64 rng(4);
  check_block_jacobians(block_attitude_global(), rng, 500);
  check_block_jacobians(block_attitude_body(), rng, 500);
}

TEST(GravityBlocks, GlobalGravityIsBitwiseStable) {
  std::mt19937_64 rng(5);
  const auto b = block_gravity_global(9.81);
  auto x = oracle::random_point(b.manifold, rng);
  const auto x0 = x;
  for (int i = 0; i < 1000; ++i) x = b.step(x, Vec(), 0.01);
  EXPECT_EQ(x.rep, x0.rep);
}

TEST(GravityBlocks, BodyGravityRotatesAgainstBodyRate) {
  std::mt19937_64 rng(6);
  const auto b = block_gravity_body(9.81);
  auto x = oracle::random_point(b.manifold, rng);
  EXPECT_EQ(b.step(x, Vec::Zero(3), 0.01).rep, x.rep);
  const Vec3 w = oracle::gaussian(rng, 3);
  const Vec3 x0(x.rep);
  for (int i = 0; i < 10000; ++i) x = b.step(x, Vec(w), 0.01);
  EXPECT_NEAR(x.rep.norm(), 9.81, 1e-9 * 9.81);
  EXPECT_LT((Vec3(x.rep) - oracle::rodrigues(-100.0 * w) * x0).norm(), 1e-9);
}

TEST(GravityBlocks, JacobiansMatchFiniteDifference) {
  std::mt19937_64 rng(7);
  check_block_jacobians(block_gravity_global(9.81), rng, 500);
  check_block_jacobians(block_gravity_body(9.81), rng, 500);
}

TEST(BearingBlock, StaticCameraKeepsBearing) {
  std::mt19937_64 rng(8);
  const auto b = block_bearing_landmark();
  StatePoint x(Vec(4));
  x.rep << oracle::unit_vector(rng), 3.0;
  EXPECT_EQ(b.step(x, Vec::Zero(6), 0.01).rep, x.rep);
}

TEST(BearingBlock, TranslationMovesBearingPerpendicular) {
  std::mt19937_64 rng(9);
  const auto b = block_bearing_landmark();
  for (int i = 0; i < 100; ++i) {
    StatePoint x(Vec(4));
    x.rep << oracle::unit_vector(rng), 2.0;
    Vec u = Vec::Zero(6);
    u.tail<3>() = oracle::gaussian(rng, 3);
    const Vec f = b.f(x, u, Vec::Zero(6));
    EXPECT_LT(std::abs(f.head<3>().dot(x.rep.head<3>())), 1e-12);
  }
}

TEST(BearingBlock, LandmarkStaysFixedInWorld) {
  const auto b = block_bearing_landmark();
  const double dt = 1e-3;
  const Vec3 omega(0.4, -0.3, 0.8);
  const auto cam_R = [&](double t) { return oracle::rodrigues(omega * t); };
  const auto cam_p = [](double t) { return Vec3(std::sin(t), 0.5 * t, std::cos(2 * t)); };
  const auto cam_v = [](double t) { return Vec3(std::cos(t), 0.5, -2 * std::sin(2 * t)); };

  const Vec3 landmark(3.0, -1.0, 4.0);
  const Vec3 rel = cam_R(0).transpose() * (landmark - cam_p(0));
  StatePoint x(Vec(4));
  x.rep << rel.normalized(), rel.norm();

  double worst = 0;
  for (int k = 0; k < 100; ++k) {
    const double t = k * dt;
    Vec u(6);
    u << omega, cam_R(t).transpose() * cam_v(t);
    x = b.step(x, u, dt);
    const double t1 = t + dt;
    const Vec3 rebuilt = cam_R(t1) * (Vec3(x.rep.head<3>()) * x.rep(3)) + cam_p(t1);
    worst = std::max(worst, (rebuilt - landmark).norm() / landmark.norm());
  }
  EXPECT_LT(worst, 1e-3);
}

TEST(BearingBlock, JacobiansMatchFiniteDifference) {
  std::mt19937_64 rng(10);
  const auto sample = [](std::mt19937_64& r) {
    StatePoint x(Vec(4));
    x.rep << oracle::unit_vector(r), 1.0 + std::abs(oracle::gaussian(r, 1, 3.0)(0));
    return x;
  };
  check_block_jacobians(block_bearing_landmark(), rng, 500, sample);
  DepthParam inv;
  inv.d = [](double rho) { return 1.0 / rho; };
  inv.dd = [](double rho) { return -1.0 / (rho * rho); };
  inv.ddd = [](double rho) { return 2.0 / (rho * rho * rho); };
  check_block_jacobians(block_bearing_landmark(inv), rng, 500, sample);
}

TEST(LidarInertial, Dimensions) {
  const auto m = lidar_inertial_model(0.005);
  EXPECT_EQ(m.state.tangent_dim(), 23);
  EXPECT_EQ(m.state.control_dim(), 24);
  EXPECT_EQ(m.state.rep_dim(), 36);
  EXPECT_EQ(m.noise_dim(), 12);
  EXPECT_EQ(m.state.leaves().size(), 8u);
  EXPECT_EQ(m.state.leaves()[li::kG].n, 2);
  EXPECT_THROW(lidar_inertial_model(0.0), ContractViolation);
}

TEST(LidarInertial, HoverAtRestIsEquilibrium) {
  std::mt19937_64 rng(11);
  auto s = random_li_state(rng);
  s.v.setZero();
  const auto m = lidar_inertial_model(0.005);
  Vec u(6);
  u << s.R.transpose() * -s.g + s.b_a, s.b_w;
  const Vec f = m.f(pack(s), u, Vec::Zero(12));
  EXPECT_LT(f.head<9>().norm(), 1e-14);
}

TEST(LidarInertial, ProcessJacobianSparsity) {
  std::mt19937_64 rng(12);
  const auto m = lidar_inertial_model(0.005);
  for (int i = 0; i < 20; ++i) {
    const Mat D = m.df_dx(pack(random_li_state(rng)), oracle::gaussian(rng, 6));
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> allowed = Eigen::Matrix<bool, -1, -1>::Constant(24, 23, false);
    allowed.block(0, 3, 3, 3).setConstant(true);
    allowed.block(3, 6, 3, 3).setConstant(true);
    allowed.block(3, 9, 3, 3).setConstant(true);
    allowed.block(3, 15, 3, 2).setConstant(true);
    allowed.block(6, 12, 3, 3).setConstant(true);
    for (int r = 0; r < 24; ++r)
      for (int c = 0; c < 23; ++c)
        if (!allowed(r, c)) EXPECT_EQ(D(r, c), 0.0) << r << "," << c;
    EXPECT_EQ(Mat(D.block(0, 3, 3, 3)), Mat::Identity(3, 3));
    EXPECT_EQ(Mat(D.block(6, 12, 3, 3)), -Mat::Identity(3, 3));
  }
}

TEST(LidarInertial, PointOnItsPlaneHasZeroResidual) {
  std::mt19937_64 rng(13);
  const auto m = lidar_inertial_model(0.005);
  for (int i = 0; i < 100; ++i) {
    const auto s = random_li_state(rng);
    Scan sc = random_scan(rng, s, 5, true);
    for (auto& f : sc.features) {
      const Vec3 pw = s.R * (s.R_ext * f.p_f + s.p_ext) + s.p;
      Vec3 t = oracle::unit_vector(rng);
      t = f.kind == FeatureKind::Plane ? (t - t.dot(f.u) * f.u).eval() : f.u;
      f.q = pw + 1.7 * t;
    }
    EXPECT_LT(m.h(pack(s), Vec::Zero(15), sc).norm(), 1e-12);
  }
}

TEST(LidarInertial, JacobiansMatchFiniteDifference) {
  std::mt19937_64 rng(14);
  const auto m = lidar_inertial_model(0.005);
  for (int i = 0; i < 500; ++i) {
    const auto s = random_li_state(rng);
    const auto x = pack(s);
    const Vec u = oracle::gaussian(rng, 6, 3.0);
    const Vec w0 = Vec::Zero(12);
    const auto gx = [&](const Vec& d) -> Vec { return m.f(boxplus(m.state, x, d), u, w0); };
    const auto gw = [&](const Vec& w) -> Vec { return m.f(x, u, w); };
    EXPECT_TRUE(jacobian_close(m.df_dx(x, u), numeric_jacobian(gx, Vec::Zero(23))));
    EXPECT_TRUE(jacobian_close(m.df_dw(x, u), numeric_jacobian(gw, w0)));

    const Scan sc = random_scan(rng, s, 6, i % 2 == 1);
    const int p = 3 * static_cast<int>(sc.features.size());
    const Vec v0 = Vec::Zero(p);
    const Vec h0 = m.h(x, v0, sc);
    const auto hx = [&](const Vec& d) -> Vec { return m.h(boxplus(m.state, x, d), v0, sc) - h0; };
    const auto hv = [&](const Vec& v) -> Vec { return m.h(x, v, sc) - h0; };
    EXPECT_TRUE(jacobian_close(m.dh_dx(x, sc), numeric_jacobian(hx, Vec::Zero(23))));
    EXPECT_TRUE(jacobian_close(m.dh_dv(x, sc), numeric_jacobian(hv, v0)));
  }
}

TEST(LidarInertial, EmptyScanIsRejected) {
  const auto m = lidar_inertial_model(0.005);
  const FilterState s{pack(LidarInertialState{}), Mat::Identity(23, 23)};
  EXPECT_THROW(update(m, s, Vec(), Scan{}), ContractViolation);
}

TEST(LidarInertial, EdgeFeaturesNeedRankDeficientSolve) {
  std::mt19937_64 rng(15);
  const auto m = lidar_inertial_model(0.005);
  const auto s = random_li_state(rng);
  Scan sc = random_scan(rng, s, 6, true);
  const FilterState prior{pack(s), Mat::Identity(23, 23) * 1e-2};
  EXPECT_THROW(update(m, prior, Vec::Zero(sc.rows()), sc), SolverError);
  UpdateConfig cfg;
  cfg.allow_rank_deficient = true;
  const auto [post, d] = update(m, prior, Vec::Zero(sc.rows()), sc, cfg);
  EXPECT_TRUE(post.P.allFinite());
  EXPECT_TRUE(post.x.rep.allFinite());
}

TEST(LidarInertial, IteratedCostIsNonIncreasing) {
  std::mt19937_64 rng(16);
  const auto m = lidar_inertial_model(0.005);
  int ok = 0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    const auto truth = random_li_state(rng);
    const Scan sc = random_scan(rng, truth, 15, false);
    Vec dx(23);
    dx << oracle::gaussian(rng, 3, 0.1), oracle::gaussian(rng, 3, 0.1), oracle::gaussian(rng, 3, 0.05),
        oracle::gaussian(rng, 6, 0.01), oracle::gaussian(rng, 2, 0.02), oracle::gaussian(rng, 3, 0.05),
        oracle::gaussian(rng, 3, 0.05);
    Vec sig(23);
    sig << Vec::Constant(6, 0.1), Vec::Constant(3, 0.05), Vec::Constant(6, 0.01), Vec::Constant(2, 0.02),
        Vec::Constant(6, 0.05);
    const FilterState prior{boxplus(m.state, pack(truth), dx), Mat(sig.array().square().matrix().asDiagonal())};
    UpdateConfig cfg;
    cfg.max_iterations = 10;
    cfg.keep_iterates = true;
    const auto d = update(m, prior, Vec::Zero(sc.rows()), sc, cfg).second;

    const Mat D = m.dh_dv(prior.x, sc);
    const Mat Rbar = D * m.R(sc) * D.transpose();
    const auto cost = [&](const StatePoint& x) {
      const Vec r = -m.h(x, Vec::Zero(3 * 15), sc);
      const Vec e = boxminus(m.state, x, prior.x);
      return r.dot(Rbar.llt().solve(r)) + e.dot(prior.P.llt().solve(e));
    };
    bool mono = true;
    double prev = cost(d.iterates[0]);
    for (std::size_t j = 1; j < d.iterates.size(); ++j) {
      const double c = cost(d.iterates[j]);
      if (c > prev * (1 + 1e-9) + 1e-12) mono = false;
      prev = c;
    }
    ok += mono;
  }
  EXPECT_GE(ok, 0.95 * trials);
}
