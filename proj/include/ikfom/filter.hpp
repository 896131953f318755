#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "ikfom/errors.hpp"
#include "ikfom/manifold.hpp"
#include "ikfom/system_model.hpp"

namespace ikfom {

struct FilterState {
  StatePoint x;
  Mat P;
};

struct UpdateConfig {
  int max_iterations = 4;
  double convergence_tol = 1e-6;
  // Accept a singular innovation covariance (e.g. edge features, whose
  // residual has rank 2 in 3 rows) and solve it in the least-squares sense.
  bool allow_rank_deficient = false;
  bool keep_iterates = false;
};

struct UpdateDiagnostics {
  int kappa = 0;
  std::vector<double> residual_norms;
  std::vector<double> step_norms;
  double s_rcond = 0.0;
  double j_deviation = 0.0;  // |J - I| at the last iteration
  double l_deviation = 0.0;  // |L - I|
  std::vector<StatePoint> iterates;  // x^0 .. x^{kappa+1}, only with keep_iterates
};

inline void symmetrize(Mat& P) { P = 0.5 * (P + P.transpose()).eval(); }

/// Manifold parts of the propagation Jacobians at x for one step with input u.
template <class Ctx>
std::pair<Mat, Mat> compute_G(const SystemModel<Ctx>& model, const StatePoint& x, const Vec& u) {
  const Manifold& m = model.state;
  const Vec v = model.dt * model.f(x, u, Vec::Zero(model.noise_dim()));
  const Vec zero = zero_tangent(m);
  return {diff_u(m, x, zero, v), diff_v(m, x, zero, v)};
}

struct PropagationJacobians {
  Mat Fx;  // n x n
  Mat Fw;  // n x q
};

/// Error-state transition matrices of one predict step at x with input u.
template <class Ctx>
PropagationJacobians propagation_jacobians(const SystemModel<Ctx>& model, const StatePoint& x, const Vec& u) {
  const auto [Gx, Gf] = compute_G(model, x, u);
  return {Gx + model.dt * Gf * model.df_dx(x, u), model.dt * Gf * model.df_dw(x, u)};
}

template <class Ctx>
FilterState predict(const SystemModel<Ctx>& model, const FilterState& s, const Vec& u) {
  const Manifold& m = model.state;
  const int n = m.tangent_dim();
  if (s.P.rows() != n || s.P.cols() != n) throw ContractViolation("predict: covariance has wrong shape");

  const Vec v = model.dt * model.f(s.x, u, Vec::Zero(model.noise_dim()));
  if (v.size() != m.control_dim() || !v.allFinite())
    throw ContractViolation("predict: f returned a non-finite or mis-sized vector");

  const Vec zero = zero_tangent(m);
  const Mat Gf = diff_v(m, s.x, zero, v);
  const Mat Fx = diff_u(m, s.x, zero, v) + model.dt * Gf * model.df_dx(s.x, u);
  const Mat Fw = model.dt * Gf * model.df_dw(s.x, u);

  FilterState out{oplus(m, s.x, v), Fx * s.P * Fx.transpose() + Fw * model.Q * Fw.transpose()};
  symmetrize(out.P);
  return out;
}

/// Maps an error in the chart at x_iter to the chart at x_prior (inverse direction).
inline Mat compute_J(const Manifold& m, const StatePoint& x_prior, const StatePoint& x_iter) {
  if (x_iter == x_prior) return Mat::Identity(m.tangent_dim(), m.tangent_dim());
  return diff_u(m, x_prior, boxminus(m, x_iter, x_prior), zero_control(m));
}

/// Moves a covariance from the chart at x_kappa to the chart at x_kappa [+] dx.
inline Mat compute_L(const Manifold& m, const StatePoint& x_kappa, const Vec& dx) {
  return diff_u(m, x_kappa, dx, zero_control(m));
}

namespace detail {

struct InnovationSolve {
  Mat S_inv_HP;  // S^{-1} H P_j
  double rcond;
};

inline InnovationSolve solve_innovation(const Mat& S, const Mat& HP, bool allow_rank_deficient) {
  Eigen::LLT<Mat> llt(S);
  const double rc = llt.info() == Eigen::Success ? llt.rcond() : 0.0;
  if (llt.info() == Eigen::Success && rc > 1e-14) return {llt.solve(HP), rc};
  if (!allow_rank_deficient) throw SolverError("update: innovation covariance is singular", rc);

  Eigen::SelfAdjointEigenSolver<Mat> es(S);
  const Vec& ev = es.eigenvalues();
  const double cut = std::max(ev.maxCoeff(), 0.0) * 1e-12 * static_cast<double>(ev.size());
  Vec inv = Vec::Zero(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev(i) > cut) inv(i) = 1.0 / ev(i);
  const Mat& V = es.eigenvectors();
  return {V * inv.asDiagonal() * (V.transpose() * HP), rc};
}

}  // namespace detail

/// Gain in the innovation form: P_j H^T S^{-1}, S = H P_j H^T + Rbar.
inline Mat kalman_gain_s_form(const Mat& Pj, const Mat& H, const Mat& Rbar) {
  const Mat S = H * Pj * H.transpose() + Rbar;
  return detail::solve_innovation(S, H * Pj, false).S_inv_HP.transpose();
}

/// Gain in the information form: (H^T Rbar^-1 H + Pj^-1)^-1 H^T Rbar^-1.
inline Mat kalman_gain_q_form(const Mat& Pj, const Mat& H, const Mat& Rbar) {
  const Eigen::LLT<Mat> rl(Rbar), pl(Pj);
  const Mat RiH = rl.solve(H);
  const Mat Qh = H.transpose() * RiH + pl.solve(Mat::Identity(Pj.rows(), Pj.cols()));
  return Eigen::LLT<Mat>(Qh).solve(RiH.transpose());
}

/// Iterated error-state update. z is the (Euclidean) measurement.
template <class Ctx>
std::pair<FilterState, UpdateDiagnostics> update(const SystemModel<Ctx>& model, const FilterState& prior,
                                                 const Vec& z, const Ctx& ctx, const UpdateConfig& cfg = {}) {
  const Manifold& m = model.state;
  const int n = m.tangent_dim();
  if (cfg.max_iterations < 0 || !(cfg.convergence_tol > 0.0))
    throw ContractViolation("update: invalid iteration settings");
  if (prior.P.rows() != n || prior.P.cols() != n) throw ContractViolation("update: covariance has wrong shape");

  const Mat Rm = model.R(ctx);
  const Vec v0 = Vec::Zero(Rm.rows());

  UpdateDiagnostics diag;
  StatePoint xj = prior.x;
  if (cfg.keep_iterates) diag.iterates.push_back(xj);
  for (int j = 0;; ++j) {
    const Vec hx = model.h(xj, v0, ctx);
    if (hx.size() != z.size()) throw ContractViolation("update: measurement size mismatch");
    const Vec r = z - hx;
    const Mat H = model.dh_dx(xj, ctx);
    const Mat D = model.dh_dv(xj, ctx);
    if (H.rows() != z.size() || H.cols() != n || D.rows() != z.size() || D.cols() != Rm.rows())
      throw ContractViolation("update: measurement Jacobian has wrong shape");
    const Mat Rbar = D * Rm * D.transpose();
    const Vec delta = boxminus(m, xj, prior.x);
    const Mat J = compute_J(m, prior.x, xj);

    const Mat Pj = J * prior.P * J.transpose();
    const Mat HP = H * Pj;
    Mat S = HP * H.transpose() + Rbar;
    symmetrize(S);
    const auto sol = detail::solve_innovation(S, HP, cfg.allow_rank_deficient);
    const Mat K = sol.S_inv_HP.transpose();
    diag.s_rcond = sol.rcond;

    const Vec Jd = J * delta;
    const Vec step = -Jd + K * (r + H * Jd);
    if (!step.allFinite()) throw SolverError("update: non-finite state correction", sol.rcond);
    const StatePoint x_kappa = xj;
    xj = boxplus(m, xj, step);

    diag.kappa = j;
    diag.residual_norms.push_back(r.norm());
    diag.step_norms.push_back(step.norm());
    diag.j_deviation = (J - Mat::Identity(n, n)).norm();
    if (cfg.keep_iterates) diag.iterates.push_back(xj);

    if (step.norm() < cfg.convergence_tol || j >= cfg.max_iterations) {
      const Mat Pplus = (Mat::Identity(n, n) - K * H) * Pj;
      const Mat L = compute_L(m, x_kappa, step);
      diag.l_deviation = (L - Mat::Identity(n, n)).norm();
      FilterState post{xj, L * Pplus * L.transpose()};
      symmetrize(post.P);
      return {std::move(post), std::move(diag)};
    }
  }
}

/// Convenience wrapper holding one filter state for a fixed model.
template <class Ctx = NoContext>
class IteratedEskf {
 public:
  IteratedEskf(SystemModel<Ctx> model, FilterState initial, UpdateConfig cfg = {})
      : model_(std::move(model)), state_(std::move(initial)), cfg_(cfg) {}

  void predict(const Vec& u) { state_ = ikfom::predict(model_, state_, u); }
  const UpdateDiagnostics& update(const Vec& z, const Ctx& ctx = {}) {
    auto [s, d] = ikfom::update(model_, state_, z, ctx, cfg_);
    state_ = std::move(s);
    last_ = std::move(d);
    return last_;
  }

  const FilterState& state() const { return state_; }
  const SystemModel<Ctx>& model() const { return model_; }
  UpdateConfig& config() { return cfg_; }

 private:
  SystemModel<Ctx> model_;
  FilterState state_;
  UpdateConfig cfg_;
  UpdateDiagnostics last_;
};

}  // namespace ikfom
