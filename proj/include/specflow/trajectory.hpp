#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "specflow/linalg.hpp"

namespace specflow {

// Fixed problem geometry: 8 s futures at 10 Hz, 1.1 s of history states,
// a 20-point goal centerline, everything stored divided by kScaleMeters.
inline constexpr int kHorizon = 80;
inline constexpr int kHistoryLen = 11;
inline constexpr int kGoalPoints = 20;
inline constexpr int kFlatDim = kHorizon * 2;  // 160
inline constexpr double kDt = 0.1;
inline constexpr double kScaleMeters = 50.0;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

struct HistFrame {
  double x = 0.0;
  double y = 0.0;
  double vx = 0.0;
  double vy = 0.0;
  double heading = 0.0;  // radians, not normalized
};

struct SceneContext {
  std::vector<HistFrame> history;  // kHistoryLen frames, last one the anchor
  std::vector<Vec2> goal_lane;     // kGoalPoints centerline points
};

enum class Tag {
  nominal,
  hard_brake,
  swerve,
  lane_violation,
  corner_cut,
  jitter,
};

inline constexpr int kTagCount = 6;
const char* tag_name(Tag t);
Tag tag_from_name(const std::string& name);

struct Scenario {
  uint64_t seed = 0;
  Tag anomaly_tag = Tag::nominal;
  SceneContext context;
  std::vector<Vec2> future;  // kHorizon points at t = 0.1 .. 8.0
};

// future -> (x1,y1,...,xT,yT), the R^160 vector the manifold is fitted on
Vector flatten(const std::vector<Vec2>& points);
std::vector<Vec2> unflatten(const Vector& flat);

std::vector<Vec2> scaled(const std::vector<Vec2>& points, double factor);

// ---- polyline kinematics (used by weighting, labeling, injectors) ----

double path_length(const std::vector<Vec2>& p);

// per-segment speeds |p[i+1]-p[i]|/dt, size T-1
std::vector<double> segment_speeds(const std::vector<Vec2>& p, double dt);

// segment direction angles with 2pi-unwrapping; zero-length segments carry
// the last valid heading forward (initial heading for a leading degenerate
// run). size T-1.
std::vector<double> segment_headings(const std::vector<Vec2>& p);

}  // namespace specflow
