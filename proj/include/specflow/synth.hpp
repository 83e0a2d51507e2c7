#pragma once

#include <cstdint>
#include <vector>

#include "specflow/rng.hpp"
#include "specflow/trajectory.hpp"

namespace specflow {

struct GeneratorConfig {
  int n_train = 20000;
  int n_val = 2000;
  double val_anomaly_frac = 0.08;

  // expert route sampling (meters, seconds)
  double speed_min = 6.0;
  double speed_max = 14.0;
  double accel_lat_max = 2.0;   // bound on v^2 * kappa
  double curvature_max = 0.05;  // hard cap on |kappa|, contract limit 0.2
  double jerk_max = 5.0;        // m/s^3, third-difference bound on experts
  double noise_lat = 0.04;      // within-lane wander amplitude
  double noise_long = 0.02;     // speed wander amplitude, m/s

  // anomaly injection
  double brake_decel = 6.5;           // m/s^2, must stay >= 6
  double swerve_yaw = 2.2;            // rad/s, must stay >= 2
  double violation_offset_min = 1.8;  // meters from goal lane, >= 1.5
  double violation_offset_max = 2.6;
  double violation_hold = 2.4;        // seconds held off-lane, >= 2
  double jitter_sigma = 0.3;          // meters

  double scale = kScaleMeters;

  void validate() const;  // throws BAD_CONFIG outside contract ranges
};

// One sampled expert route in closed form: a speed profile, a curvature
// block, an optional lane change (straight base only) and smooth low
// amplitude within-lane noise. Tests construct these directly to pin
// closed-form geometry; generate_expert samples them.
struct RouteSpec {
  enum class Kind { straight, arc, apex, lane_change, wander };
  Kind kind = Kind::straight;

  double v0 = 10.0;
  bool has_speed_change = false;
  double dv = 0.0;
  double speed_t0 = 0.0;
  double speed_len = 3.0;

  double kappa = 0.0;       // 1/m, signed
  double kappa_t0 = 0.0;    // ramp start time
  double kappa_ramp = 0.0;  // ramp duration; 0 means a hard step at kappa_t0
  double kappa_hold = 1e9;  // time at full kappa before ramping back out

  bool has_lane_change = false;
  double lc_offset = 0.0;  // signed meters
  double lc_t0 = 0.5;
  double lc_len = 5.0;

  struct Wave {
    double amp = 0.0;
    double omega = 0.0;
    double phase = 0.0;
  };
  std::vector<Wave> lat_waves;   // lateral position noise, meters
  std::vector<Wave> long_waves;  // speed noise, m/s
};

struct ComposedRoute {
  std::vector<Vec2> future_m;        // kHorizon points, meters
  std::vector<HistFrame> history_m;  // kHistoryLen frames, meters
  std::vector<Vec2> goal_m;          // kGoalPoints centerline points, meters
};

RouteSpec sample_route(Rng& rng, const GeneratorConfig& cfg);

// Deterministic closed-form composition; the anchor is at the origin facing
// +x and the history is the straight pre-anchor continuation.
ComposedRoute compose_route(const RouteSpec& spec);

Scenario generate_expert(uint64_t seed, const GeneratorConfig& cfg);

// Assemble a normalized scenario from an explicit route; the route-level
// twin of generate_expert for pinned-geometry callers.
Scenario scenario_from_route(uint64_t seed, const RouteSpec& spec,
                             const GeneratorConfig& cfg);

// Pure-future modifications in meters; context and goal stay untouched.
// Throws BAD_INPUT when the input is not nominal.
Scenario inject_anomaly(const Scenario& s, Tag tag, uint64_t seed,
                        const GeneratorConfig& cfg);

// True when the trajectory turns enough (>= 0.35 rad inside a window) for
// a chord replacement to be a meaningful corner cut.
bool corner_cut_feasible(const std::vector<Vec2>& future_m);

struct DatasetSplit {
  GeneratorConfig config;
  uint64_t seed = 0;
  std::vector<Scenario> train;  // all nominal
  std::vector<Scenario> val;    // ~val_anomaly_frac injected
};

DatasetSplit build_dataset(const GeneratorConfig& cfg, uint64_t seed);

}  // namespace specflow
