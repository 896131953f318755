#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

#include "ikfom/sim/trial.hpp"

namespace ikfom::sim {

struct Quantiles {
  double min = 0, q25 = 0, median = 0, q75 = 0, max = 0;
};

inline Quantiles quantiles(std::vector<double> v) {
  Quantiles q;
  if (v.empty()) return q;
  std::sort(v.begin(), v.end());
  const auto at = [&](double p) {
    const double pos = p * (v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - lo) * (v[hi] - v[lo]);
  };
  q.min = v.front();
  q.q25 = at(0.25);
  q.median = at(0.5);
  q.q75 = at(0.75);
  q.max = v.back();
  return q;
}

struct MonteCarloSummary {
  int trials = 0;
  int failures = 0;
  double mean_nees = 0.0;  // over all scored steps of all successful trials
  Quantiles trial_nees;    // per-trial mean NEES
  int nees_failures = 0;
  double containment_rate = 0.0;
  double gravity_containment = 0.0;
  double final_drift_m = 0.0;
  Quantiles drift;
  double iterations_mean = 0.0;
  Quantiles rext_err_deg;
  Quantiles pext_err_m;
  int state_dim = li::kTangentDim;
  std::vector<TrialRecord> records;
};

/// Seed of trial i of a run with base seed s.
inline std::uint64_t trial_seed(std::uint64_t s, int i) { return s ^ static_cast<std::uint64_t>(i); }

/// Runs trial(i) for i in [0, trials) on a pool of threads and returns the
/// results in index order.
template <class Fn>
auto run_parallel(int trials, Fn&& trial, unsigned threads = 0) {
  using Result = decltype(trial(0));
  if (trials < 1) throw ConfigError("trials must be at least 1");
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(trials));
  std::vector<Result> out(trials);
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(trials);
  const auto worker = [&] {
    for (int i = next++; i < trials; i = next++) {
      try {
        out[i] = trial(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

/// Sequential reduce over trial index order.
inline MonteCarloSummary summarize(std::vector<TrialRecord> records) {
  MonteCarloSummary s;
  s.trials = static_cast<int>(records.size());
  double nees_sum = 0, drift_sum = 0, iter_sum = 0;
  long nees_n = 0, in = 0, axes = 0, g_in = 0, steps = 0, updates = 0;
  std::vector<double> tn, dr, re, pe;
  for (const auto& r : records) {
    if (!r.ok) {
      ++s.failures;
      continue;
    }
    nees_sum += r.nees_sum;
    nees_n += r.nees_samples;
    s.nees_failures += r.nees_failures;
    for (int c : r.inside_3sigma) in += c;
    axes += static_cast<long>(r.steps) * static_cast<long>(r.inside_3sigma.size());
    g_in += r.gravity_inside;
    steps += r.steps;
    iter_sum += r.iterations_sum;
    updates += r.updates;
    drift_sum += r.final_drift_m;
    tn.push_back(r.mean_nees());
    dr.push_back(r.final_drift_m);
    re.push_back(r.final_rext_err_deg);
    pe.push_back(r.final_pext_err_m);
  }
  const int good = s.trials - s.failures;
  s.mean_nees = nees_n ? nees_sum / nees_n : 0.0;
  s.containment_rate = axes ? static_cast<double>(in) / axes : 0.0;
  s.gravity_containment = steps ? static_cast<double>(g_in) / steps : 0.0;
  s.final_drift_m = good ? drift_sum / good : 0.0;
  s.iterations_mean = updates ? iter_sum / updates : 0.0;
  s.trial_nees = quantiles(tn);
  s.drift = quantiles(dr);
  s.rext_err_deg = quantiles(re);
  s.pext_err_m = quantiles(pe);
  s.records = std::move(records);
  return s;
}

/// Monte Carlo over the scenario of cfg; trial i uses seed cfg.seed ^ i.
inline MonteCarloSummary run_monte_carlo(const ScenarioConfig& cfg, int trials, unsigned threads = 0) {
  cfg.validate();
  return summarize(run_parallel(
      trials,
      [&cfg](int i) {
        ScenarioConfig c = cfg;
        c.seed = trial_seed(cfg.seed, i);
        return run_trial(c);
      },
      threads));
}

struct PairedRun {
  std::uint64_t seed = 0;
  TrialRecord ikfom, augmented, hard;
};

/// Runs the on-manifold filter and both baseline variants on the same
/// trajectory for each trial seed.
inline std::vector<PairedRun> run_paired(const ScenarioConfig& cfg, int trials, unsigned threads = 0) {
  cfg.validate();
  return run_parallel(
      trials,
      [&cfg](int i) {
        ScenarioConfig c = cfg;
        c.seed = trial_seed(cfg.seed, i);
        const Trajectory tr = generate_trajectory(c);
        PairedRun r;
        r.seed = c.seed;
        r.ikfom = run_ikfom(c, tr);
        c.variant = BaselineVariant::Augmented;
        r.augmented = run_baseline(c, tr);
        c.variant = BaselineVariant::Hard;
        r.hard = run_baseline(c, tr);
        return r;
      },
      threads);
}

}  // namespace ikfom::sim
