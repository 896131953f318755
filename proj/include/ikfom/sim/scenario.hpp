#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

#include "ikfom/models/lidar_inertial.hpp"

namespace ikfom::sim {

namespace li = models::li;

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class TrajectoryKind { Static, Circle, FastRotation };
enum class FilterKind { Ikfom, Quaternion };
enum class BaselineVariant { Augmented, Hard };

inline TrajectoryKind parse_trajectory(const std::string& s) {
  if (s == "static") return TrajectoryKind::Static;
  if (s == "circle") return TrajectoryKind::Circle;
  if (s == "fast-rotation") return TrajectoryKind::FastRotation;
  throw ConfigError("unknown scenario '" + s + "'");
}

inline std::string to_string(TrajectoryKind k) {
  switch (k) {
    case TrajectoryKind::Static: return "static";
    case TrajectoryKind::Circle: return "circle";
    case TrajectoryKind::FastRotation: return "fast-rotation";
  }
  return "?";
}

inline FilterKind parse_filter(const std::string& s) {
  if (s == "ikfom") return FilterKind::Ikfom;
  if (s == "quat") return FilterKind::Quaternion;
  throw ConfigError("unknown filter '" + s + "'");
}

inline BaselineVariant parse_variant(const std::string& s) {
  if (s == "augmented") return BaselineVariant::Augmented;
  if (s == "hard") return BaselineVariant::Hard;
  throw ConfigError("unknown baseline variant '" + s + "'");
}

inline std::string to_string(BaselineVariant v) { return v == BaselineVariant::Augmented ? "augmented" : "hard"; }

inline constexpr double kDeg = std::numbers::pi / 180.0;

/// Standard deviations of the initial estimation error, one per state block.
/// Rotations and the gravity direction are in radians.
struct InitialSigma {
  double p = 0.05;
  double v = 0.05;
  double R = 2.0 * kDeg;
  double b_a = 0.05;
  double b_w = 0.005;
  double g = 1.0 * kDeg;
  double R_ext = 3.0 * kDeg;
  double p_ext = 0.05;
};

struct ScenarioConfig {
  std::uint64_t seed = 1;
  double duration = 20.0;  // s
  double dt = 0.01;        // s
  TrajectoryKind trajectory = TrajectoryKind::Circle;
  double peak_rate = 357.0 * kDeg;  // rad/s, fast-rotation only
  int features = 10;                // points per lidar update
  int planes = 20;
  int meas_every = 10;  // IMU steps between lidar updates
  models::LidarInertialNoise noise;
  InitialSigma init;
  int nmax = 4;
  FilterKind filter = FilterKind::Ikfom;
  BaselineVariant variant = BaselineVariant::Augmented;
  double norm_sigma = 1e-3;  // augmented normalization pseudo-measurement
  bool keep_steps = false;

  int steps() const { return static_cast<int>(std::floor(duration / dt + 1e-9)); }

  void validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive");
    if (!(duration >= dt) || !std::isfinite(duration)) throw ConfigError("duration must be at least dt");
    const auto& n = noise;
    for (double s : {n.sigma_a, n.sigma_w, n.sigma_ba, n.sigma_bw, n.sigma_feature, norm_sigma})
      if (!(s >= 0.0)) throw ConfigError("noise levels must be non-negative");
    for (double s : {init.p, init.v, init.R, init.b_a, init.b_w, init.g, init.R_ext, init.p_ext})
      if (!(s >= 0.0)) throw ConfigError("initial sigmas must be non-negative");
    if (features < 1) throw ConfigError("features must be at least 1");
    if (planes < 1) throw ConfigError("planes must be at least 1");
    if (meas_every < 1) throw ConfigError("meas_every must be at least 1");
    if (nmax < 0) throw ConfigError("nmax must be non-negative");
    if (!(peak_rate >= 0.0)) throw ConfigError("peak rate must be non-negative");
  }
};

}  // namespace ikfom::sim
