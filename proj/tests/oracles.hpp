#pragma once

#include <cmath>
#include <functional>
#include <random>

#include <Eigen/Dense>

#include "ikfom/manifold.hpp"

namespace oracle {

using ikfom::Mat;
using ikfom::Vec;

inline constexpr double kFdStep = 1e-6;

/// Central finite-difference Jacobian of g at a.
inline Mat numeric_jacobian(const std::function<Vec(const Vec&)>& g, const Vec& a, double h = kFdStep) {
  const Vec g0 = g(a);
  Mat J(g0.size(), a.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    Vec ap = a, am = a;
    ap(i) += h;
    am(i) -= h;
    J.col(i) = (g(ap) - g(am)) / (2.0 * h);
  }
  return J;
}

/// Element-wise check |a - b| <= rel * max(|a|, |b|) + abs_floor.
inline bool jacobian_close(const Mat& analytic, const Mat& numeric, double rel = 1e-5, double abs_floor = 1e-7) {
  if (analytic.rows() != numeric.rows() || analytic.cols() != numeric.cols()) return false;
  for (Eigen::Index i = 0; i < analytic.rows(); ++i)
    for (Eigen::Index j = 0; j < analytic.cols(); ++j) {
      const double a = analytic(i, j), b = numeric(i, j);
      if (std::abs(a - b) > rel * std::max(std::abs(a), std::abs(b)) + abs_floor) return false;
    }
  return true;
}

/// Rodrigues rotation written out from the axis-angle definition,
/// independent of the library's series branches.
inline Eigen::Matrix3d rodrigues(const Eigen::Vector3d& w) {
  const double t = w.norm();
  if (t == 0.0) return Eigen::Matrix3d::Identity();
  return Eigen::AngleAxisd(t, w / t).toRotationMatrix();
}

inline Vec gaussian(std::mt19937_64& rng, int n, double sigma = 1.0) {
  std::normal_distribution<double> nd(0.0, sigma);
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = nd(rng);
  return v;
}

inline Eigen::Vector3d unit_vector(std::mt19937_64& rng) {
  Eigen::Vector3d v;
  do v = gaussian(rng, 3); while (v.norm() < 1e-3);
  return v.normalized();
}

inline Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  Eigen::Vector4d q;
  do q = gaussian(rng, 4); while (q.norm() < 1e-3);
  q.normalize();
  return Eigen::Quaterniond(q(0), q(1), q(2), q(3)).toRotationMatrix();
}

/// Tangent vector with norm uniformly in [0, max_norm) per leaf.
inline Vec random_tangent(const ikfom::Manifold& m, std::mt19937_64& rng, double max_norm) {
  std::uniform_real_distribution<double> U(0.0, max_norm);
  Vec u(m.tangent_dim());
  for (const auto& lf : m.leaves()) {
    Vec d = gaussian(rng, lf.n);
    if (lf.kind == ikfom::Kind::Euclidean) u.segment(lf.t_off, lf.n) = d * max_norm;
    else u.segment(lf.t_off, lf.n) = d.normalized() * U(rng);
  }
  return u;
}

inline ikfom::StatePoint random_point(const ikfom::Manifold& m, std::mt19937_64& rng) {
  ikfom::StatePoint x(Vec::Zero(m.rep_dim()));
  for (const auto& lf : m.leaves()) {
    auto seg = x.rep.segment(lf.r_off, lf.rep);
    switch (lf.kind) {
      case ikfom::Kind::Euclidean: seg = gaussian(rng, lf.n, 3.0); break;
      case ikfom::Kind::SO3: ikfom::rot_to_rep(random_rotation(rng), seg); break;
      case ikfom::Kind::Sphere2: seg = unit_vector(rng) * lf.radius; break;
      case ikfom::Kind::Compound: break;
    }
  }
  return x;
}

/// Standalone linear Kalman filter, written without any of the library's machinery.
struct TextbookKf {
  Eigen::VectorXd x;
  Eigen::MatrixXd P;

  void predict(const Eigen::MatrixXd& F, const Eigen::MatrixXd& B, const Eigen::VectorXd& u,
               const Eigen::MatrixXd& Gw, const Eigen::MatrixXd& Q) {
    x = F * x + B * u;
    P = F * P * F.transpose() + Gw * Q * Gw.transpose();
  }
  void update(const Eigen::MatrixXd& H, const Eigen::VectorXd& z, const Eigen::MatrixXd& R) {
    const Eigen::MatrixXd S = H * P * H.transpose() + R;
    const Eigen::MatrixXd K = P * H.transpose() * S.inverse();
    x = x + K * (z - H * x);
    const Eigen::MatrixXd IKH = Eigen::MatrixXd::Identity(P.rows(), P.cols()) - K * H;
    P = IKH * P;
  }
};

}  // namespace oracle
