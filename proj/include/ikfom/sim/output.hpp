#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "ikfom/sim/monte_carlo.hpp"

namespace ikfom::sim {

inline constexpr const char* kCsvHeader = "step,t,block,component,truth,estimate,error,sigma3";

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Plot coordinates of one state block: the raw values for vector blocks,
/// the rotation vector for rotations, and the offset from straight-down
/// gravity (in the chart at straight-down) for the gravity direction.
inline Vec block_coordinates(const StatePoint& x, int block) {
  const auto s = models::unpack(x);
  switch (block) {
    case li::kP: return s.p;
    case li::kV: return s.v;
    case li::kR: return so3_log(s.R);
    case li::kBa: return s.b_a;
    case li::kBw: return s.b_w;
    case li::kG: {
      const Vec3 down(0.0, 0.0, -s.g.norm());
      return sphere_boxminus(s.g, down);
    }
    case li::kRext: return so3_log(s.R_ext);
    default: return s.p_ext;
  }
}

inline void write_trial_csv(const TrialRecord& rec, std::ostream& os) {
  const Manifold m = models::lidar_inertial_manifold();
  os << kCsvHeader << '\n';
  for (const auto& r : rec.records) {
    for (std::size_t b = 0; b < m.leaves().size(); ++b) {
      const auto& lf = m.leaves()[b];
      const Vec tv = block_coordinates(r.truth, static_cast<int>(b));
      const Vec ev = block_coordinates(r.estimate, static_cast<int>(b));
      for (int c = 0; c < lf.n; ++c) {
        os << r.step << ',' << fmt(r.t) << ',' << li::kBlockNames[b] << ',' << c << ',' << fmt(tv(c)) << ','
           << fmt(ev(c)) << ',' << fmt(r.error(lf.t_off + c)) << ',' << fmt(r.sigma3(lf.t_off + c)) << '\n';
      }
    }
  }
}

inline nlohmann::ordered_json summary_json(double mean_nees, double containment, double drift, double iterations) {
  nlohmann::ordered_json j;
  j["mean_nees"] = mean_nees;
  j["containment_rate"] = containment;
  j["final_drift_m"] = drift;
  j["iterations_mean"] = iterations;
  return j;
}

inline nlohmann::ordered_json summary_json(const TrialRecord& r) {
  return summary_json(r.mean_nees(), r.containment_rate(), r.final_drift_m, r.iterations_mean());
}

inline nlohmann::ordered_json summary_json(const MonteCarloSummary& s) {
  return summary_json(s.mean_nees, s.containment_rate, s.final_drift_m, s.iterations_mean);
}

inline nlohmann::ordered_json quantiles_json(const Quantiles& q) {
  return {{"min", q.min}, {"q25", q.q25}, {"median", q.median}, {"q75", q.q75}, {"max", q.max}};
}

/// Extended Monte Carlo statistics.
inline nlohmann::ordered_json details_json(const MonteCarloSummary& s) {
  nlohmann::ordered_json j;
  j["trials"] = s.trials;
  j["failures"] = s.failures;
  j["state_dim"] = s.state_dim;
  j["chi2_mean_reference"] = s.state_dim;
  j["mean_nees"] = s.mean_nees;
  j["trial_mean_nees"] = quantiles_json(s.trial_nees);
  j["nees_factor_failures"] = s.nees_failures;
  j["containment_rate"] = s.containment_rate;
  j["gravity_containment_rate"] = s.gravity_containment;
  j["final_drift_m"] = quantiles_json(s.drift);
  j["extrinsic_rotation_error_deg"] = quantiles_json(s.rext_err_deg);
  j["extrinsic_translation_error_m"] = quantiles_json(s.pext_err_m);
  j["iterations_mean"] = s.iterations_mean;
  nlohmann::ordered_json fails = nlohmann::ordered_json::array();
  for (const auto& r : s.records)
    if (!r.ok) fails.push_back({{"seed", r.seed}, {"error", r.failure}});
  j["failed_trials"] = fails;
  return j;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << text;
}

}  // namespace ikfom::sim
