#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "ikfom/filter.hpp"
#include "ikfom/models/lidar_inertial.hpp"
#include "ikfom/sim/baseline.hpp"
#include "ikfom/sim/scenario.hpp"
#include "ikfom/sim/trajectory.hpp"

namespace ikfom::sim {

struct StepRecord {
  int step = 0;
  double t = 0.0;
  StatePoint truth{Vec()};
  StatePoint estimate{Vec()};
  Vec error;   // truth [-] estimate, 23 minimal coordinates
  Vec sigma3;  // 3 sqrt(diag P)
  double nees = 0.0;
};

/// Outcome of one simulated run. Per-step detail is kept only when the
/// scenario asks for it; the aggregates are always filled.
struct TrialRecord {
  std::uint64_t seed = 0;
  bool ok = true;
  std::string failure;
  int steps = 0;
  int nees_samples = 0;
  int nees_failures = 0;  // covariance that did not factor
  double nees_sum = 0.0;
  std::vector<int> inside_3sigma;  // per axis, number of steps within 3 sigma
  int gravity_inside = 0;          // steps with both gravity axes within 3 sigma
  int updates = 0;
  double iterations_sum = 0.0;
  double final_drift_m = 0.0;
  double final_rext_err_deg = 0.0;
  double final_pext_err_m = 0.0;
  std::vector<StepRecord> records;

  double mean_nees() const { return nees_samples ? nees_sum / nees_samples : 0.0; }
  double containment_rate() const {
    long in = 0;
    for (int c : inside_3sigma) in += c;
    return steps ? static_cast<double>(in) / (static_cast<double>(steps) * inside_3sigma.size()) : 0.0;
  }
  double gravity_containment() const { return steps ? static_cast<double>(gravity_inside) / steps : 0.0; }
  double iterations_mean() const { return updates ? iterations_sum / updates : 0.0; }
};

/// Error of an estimate in the minimal coordinates of the on-manifold state.
inline Vec state_error(const models::LidarInertialState& truth, const models::LidarInertialState& est,
                       const Manifold& m) {
  return boxminus(m, models::pack(truth), models::pack(est));
}

namespace detail {

inline void score_step(TrialRecord& rec, const ScenarioConfig& cfg, int k, const models::LidarInertialState& truth,
                       const models::LidarInertialState& est, const Mat& P, const Manifold& m) {
  const Vec e = state_error(truth, est, m);
  const Vec sd = P.diagonal().cwiseMax(0.0).cwiseSqrt();
  for (Eigen::Index i = 0; i < e.size(); ++i)
    if (std::abs(e(i)) <= 3.0 * sd(i)) ++rec.inside_3sigma[i];
  if (std::abs(e(15)) <= 3.0 * sd(15) && std::abs(e(16)) <= 3.0 * sd(16)) ++rec.gravity_inside;

  double nees = std::numeric_limits<double>::quiet_NaN();
  const Eigen::LLT<Mat> llt(P);
  if (llt.info() == Eigen::Success) {
    nees = e.dot(llt.solve(e));
    rec.nees_sum += nees;
    ++rec.nees_samples;
  } else {
    ++rec.nees_failures;
  }
  ++rec.steps;
  if (cfg.keep_steps)
    rec.records.push_back({k, k * cfg.dt, models::pack(truth), models::pack(est), e, 3.0 * sd, nees});
}

inline void finish(TrialRecord& rec, const models::LidarInertialState& truth, const models::LidarInertialState& est) {
  rec.final_drift_m = (est.p - truth.p).norm();
  rec.final_rext_err_deg = so3_log(est.R_ext.transpose() * truth.R_ext).norm() / kDeg;
  rec.final_pext_err_m = (est.p_ext - truth.p_ext).norm();
}

}  // namespace detail

/// Runs the on-manifold iterated filter over a generated trajectory.
inline TrialRecord run_ikfom(const ScenarioConfig& cfg, const Trajectory& tr) {
  const auto model = models::lidar_inertial_model(cfg.dt, cfg.noise);
  UpdateConfig ucfg;
  ucfg.max_iterations = cfg.nmax;
  IteratedEskf<models::Scan> filter(model, {models::pack(tr.initial_estimate), tr.P0}, ucfg);

  TrialRecord rec;
  rec.seed = cfg.seed;
  rec.inside_3sigma.assign(li::kTangentDim, 0);
  const int K = static_cast<int>(tr.u_meas.size());
  try {
    detail::score_step(rec, cfg, 0, tr.truth[0], tr.initial_estimate, tr.P0, model.state);
    for (int k = 0; k < K; ++k) {
      filter.predict(tr.u_meas[k]);
      const auto& scan = tr.scans[k + 1];
      if (!scan.features.empty()) {
        const auto& d = filter.update(Vec::Zero(scan.rows()), scan);
        ++rec.updates;
        rec.iterations_sum += d.kappa + 1;
      }
      detail::score_step(rec, cfg, k + 1, tr.truth[k + 1], models::unpack(filter.state().x), filter.state().P,
                         model.state);
    }
  } catch (const std::exception& e) {
    rec.ok = false;
    rec.failure = e.what();
  }
  detail::finish(rec, tr.truth[rec.steps > 0 ? rec.steps - 1 : 0], models::unpack(filter.state().x));
  return rec;
}

/// Runs the quaternion baseline over the same trajectory.
inline TrialRecord run_baseline(const ScenarioConfig& cfg, const Trajectory& tr) {
  const double gmag = models::LidarInertialState{}.g.norm();
  const auto model = quat::model(cfg.dt, cfg.noise, cfg.norm_sigma);
  const Manifold li_m = models::lidar_inertial_manifold(gmag);
  UpdateConfig ucfg;
  ucfg.max_iterations = cfg.nmax;

  Vec x0 = quat::from_state(tr.initial_estimate);
  const Mat T0 = quat::from_minimal(x0);
  FilterState fs{StatePoint(x0), T0 * tr.P0 * T0.transpose()};

  TrialRecord rec;
  rec.seed = cfg.seed;
  rec.inside_3sigma.assign(li::kTangentDim, 0);
  const auto score = [&](int k) {
    const Mat T = quat::to_minimal(fs.x.rep);
    detail::score_step(rec, cfg, k, tr.truth[k], quat::to_state(fs.x.rep, gmag), T * fs.P * T.transpose(), li_m);
  };
  const int K = static_cast<int>(tr.u_meas.size());
  try {
    score(0);
    for (int k = 0; k < K; ++k) {
      fs = predict(model, fs, tr.u_meas[k]);
      quat::normalize(fs.x.rep, gmag);
      const auto& scan = tr.scans[k + 1];
      if (!scan.features.empty()) {
        const quat::Context ctx{&scan, cfg.variant == BaselineVariant::Augmented, gmag};
        auto [post, d] = update(model, fs, quat::observed(ctx), ctx, ucfg);
        fs = std::move(post);
        quat::normalize(fs.x.rep, gmag);
        ++rec.updates;
        rec.iterations_sum += d.kappa + 1;
      }
      score(k + 1);
    }
  } catch (const std::exception& e) {
    rec.ok = false;
    rec.failure = e.what();
  }
  detail::finish(rec, tr.truth[rec.steps > 0 ? rec.steps - 1 : 0], quat::to_state(fs.x.rep, gmag));
  return rec;
}

inline TrialRecord run_baseline(const ScenarioConfig& cfg) { return run_baseline(cfg, generate_trajectory(cfg)); }

/// Generates the scenario of cfg and runs the filter it selects.
inline TrialRecord run_trial(const ScenarioConfig& cfg) {
  const Trajectory tr = generate_trajectory(cfg);
  return cfg.filter == FilterKind::Ikfom ? run_ikfom(cfg, tr) : run_baseline(cfg, tr);
}

}  // namespace ikfom::sim
