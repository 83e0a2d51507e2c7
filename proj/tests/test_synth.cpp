#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "specflow/complexity.hpp"
#include "specflow/errors.hpp"
#include "specflow/synth.hpp"

using namespace specflow;

namespace {

GeneratorConfig default_cfg() { return GeneratorConfig{}; }

std::vector<Vec2> future_meters(const Scenario& s, const GeneratorConfig& cfg) {
  return scaled(s.future, cfg.scale);
}

std::vector<Vec2> anchored_meters(const Scenario& s,
                                  const GeneratorConfig& cfg) {
  std::vector<Vec2> m;
  m.push_back({0.0, 0.0});
  for (const Vec2& p : future_meters(s, cfg)) m.push_back(p);
  return m;
}

double max_abs_jerk(const std::vector<Vec2>& pts_m, double dt) {
  double worst = 0.0;
  const double inv3 = 1.0 / (dt * dt * dt);
  for (size_t i = 0; i + 3 < pts_m.size(); ++i) {
    const double jx = (pts_m[i + 3].x - 3 * pts_m[i + 2].x +
                       3 * pts_m[i + 1].x - pts_m[i].x) * inv3;
    const double jy = (pts_m[i + 3].y - 3 * pts_m[i + 2].y +
                       3 * pts_m[i + 1].y - pts_m[i].y) * inv3;
    worst = std::max(worst, std::hypot(jx, jy));
  }
  return worst;
}

}  // namespace

TEST_SUITE("synth") {

TEST_CASE("constant velocity route is a straight 80 m line") {
  RouteSpec spec;  // straight, v0=10, no waves
  ComposedRoute r = compose_route(spec);
  CHECK(r.future_m.back().x == doctest::Approx(80.0).epsilon(1e-9));
  for (const Vec2& p : r.future_m) CHECK(std::fabs(p.y) < 1e-9);
  CHECK(r.history_m.back().x == 0.0);
  CHECK(r.history_m.back().heading == 0.0);
  CHECK(r.history_m.front().x == doctest::Approx(-10.0));
}

TEST_CASE("constant curvature route matches the analytic circle") {
  RouteSpec spec;
  spec.kind = RouteSpec::Kind::arc;
  spec.v0 = 10.0;
  spec.kappa = 0.05;  // R = 20 m
  spec.kappa_t0 = 0.0;
  spec.kappa_ramp = 0.0;  // engage instantly: pure arc over the horizon
  ComposedRoute r = compose_route(spec);
  const double R = 20.0;
  for (int i = 0; i < kHorizon; ++i) {
    const double t = (i + 1) * kDt;
    const double th = 10.0 * 0.05 * t;
    CHECK(std::fabs(r.future_m[size_t(i)].x - R * std::sin(th)) < 1e-6);
    CHECK(std::fabs(r.future_m[size_t(i)].y - R * (1.0 - std::cos(th))) < 1e-6);
  }
}

TEST_CASE("lane change hits the exact offset with parallel final heading") {
  RouteSpec spec;
  spec.kind = RouteSpec::Kind::lane_change;
  spec.v0 = 10.0;
  spec.has_lane_change = true;
  spec.lc_offset = 3.0;
  spec.lc_t0 = 0.5;
  spec.lc_len = 5.0;
  ComposedRoute r = compose_route(spec);
  CHECK(r.future_m.back().y == doctest::Approx(3.0).epsilon(1e-9));
  const Vec2& a = r.future_m[kHorizon - 2];
  const Vec2& b = r.future_m[kHorizon - 1];
  CHECK(std::fabs(std::atan2(b.y - a.y, b.x - a.x)) < 1e-3);
  // destination lane centerline carries the full offset throughout
  for (const Vec2& g : r.goal_m) CHECK(g.y == doctest::Approx(3.0));
}

TEST_CASE("generate_expert is deterministic and well-formed") {
  const GeneratorConfig cfg = default_cfg();
  Scenario a = generate_expert(123, cfg);
  Scenario b = generate_expert(123, cfg);
  REQUIRE(a.future.size() == size_t(kHorizon));
  REQUIRE(a.context.history.size() == size_t(kHistoryLen));
  REQUIRE(a.context.goal_lane.size() == size_t(kGoalPoints));
  CHECK(a.anomaly_tag == Tag::nominal);
  for (size_t i = 0; i < a.future.size(); ++i) {
    CHECK(a.future[i].x == b.future[i].x);
    CHECK(a.future[i].y == b.future[i].y);
  }
  // anchor at origin facing +x
  const HistFrame& anchor = a.context.history.back();
  CHECK(anchor.x == 0.0);
  CHECK(anchor.y == 0.0);
  CHECK(anchor.heading == 0.0);
  CHECK(anchor.vx > 0.0);
}

TEST_CASE("expert jerk stays within the configured bound") {
  const GeneratorConfig cfg = default_cfg();
  double worst = 0.0;
  for (uint64_t seed = 0; seed < 300; ++seed) {
    Scenario s = generate_expert(seed, cfg);
    worst = std::max(worst, max_abs_jerk(anchored_meters(s, cfg), kDt));
  }
  CHECK(worst <= cfg.jerk_max);
  CHECK(worst > 0.5);  // the generator is not degenerate-smooth
}

TEST_CASE("experts are tortuosity-sane") {
  const GeneratorConfig cfg = default_cfg();
  for (uint64_t seed = 0; seed < 50; ++seed) {
    Scenario s = generate_expert(seed, cfg);
    const double tau = tortuosity(future_meters(s, cfg));
    CHECK(tau >= 1.0);
    CHECK(tau < kTortuosityCap);
  }
}

TEST_CASE("hard_brake injection crosses the deceleration contract") {
  const GeneratorConfig cfg = default_cfg();
  Scenario nominal = generate_expert(42, cfg);
  Scenario braked = inject_anomaly(nominal, Tag::hard_brake, 7, cfg);
  CHECK(braked.anomaly_tag == Tag::hard_brake);

  auto pts = anchored_meters(braked, cfg);
  auto sp = segment_speeds(pts, kDt);
  double min_acc = 0.0;
  for (size_t i = 1; i < sp.size(); ++i)
    min_acc = std::min(min_acc, (sp[i] - sp[i - 1]) / kDt);
  CHECK(min_acc <= -6.0);

  SUBCASE("jerk energy strictly exceeds the nominal parent") {
    const double en = jerk_energy(future_meters(nominal, cfg), kDefaultAlpha, kDt);
    const double eb = jerk_energy(future_meters(braked, cfg), kDefaultAlpha, kDt);
    CHECK(eb > en);
  }
}

TEST_CASE("swerve injection exceeds 2 rad/s yaw rate") {
  const GeneratorConfig cfg = default_cfg();
  Scenario s = inject_anomaly(generate_expert(9, cfg), Tag::swerve, 3, cfg);
  auto pts = anchored_meters(s, cfg);
  auto h = segment_headings(pts);
  double max_yaw = 0.0;
  for (size_t i = 1; i < h.size(); ++i)
    max_yaw = std::max(max_yaw, std::fabs(h[i] - h[i - 1]) / kDt);
  CHECK(max_yaw >= 2.0);
}

TEST_CASE("lane violation holds an off-lane offset without yaw spikes") {
  const GeneratorConfig cfg = default_cfg();
  Scenario nominal = generate_expert(11, cfg);
  Scenario viol = inject_anomaly(nominal, Tag::lane_violation, 5, cfg);

  // compare against the scenario's own goal polyline, in meters
  const auto goal = scaled(viol.context.goal_lane, cfg.scale);
  auto dist_to_goal = [&](const Vec2& p) {
    double best = 1e18;
    for (size_t i = 1; i < goal.size(); ++i) {
      const double dx = goal[i].x - goal[i - 1].x;
      const double dy = goal[i].y - goal[i - 1].y;
      const double len2 = dx * dx + dy * dy;
      double u = len2 > 0.0
          ? ((p.x - goal[i - 1].x) * dx + (p.y - goal[i - 1].y) * dy) / len2
          : 0.0;
      u = std::clamp(u, 0.0, 1.0);
      best = std::min(best, std::hypot(p.x - (goal[i - 1].x + u * dx),
                                       p.y - (goal[i - 1].y + u * dy)));
    }
    return best;
  };

  const auto pts = future_meters(viol, cfg);
  int longest = 0, run = 0;
  for (const Vec2& p : pts) {
    run = dist_to_goal(p) >= 1.5 ? run + 1 : 0;
    longest = std::max(longest, run);
  }
  CHECK(longest >= 20);  // at least 2 s off-lane

  auto h = segment_headings(anchored_meters(viol, cfg));
  double max_yaw = 0.0;
  for (size_t i = 1; i < h.size(); ++i)
    max_yaw = std::max(max_yaw, std::fabs(h[i] - h[i - 1]) / kDt);
  CHECK(max_yaw < 1.5);
}

TEST_CASE("corner cut deviation equals the chord sagitta on a pure arc") {
  RouteSpec spec;
  spec.kind = RouteSpec::Kind::arc;
  spec.v0 = 10.0;
  spec.kappa = 0.05;
  spec.kappa_t0 = 0.0;
  spec.kappa_ramp = 0.0;
  const GeneratorConfig cfg = default_cfg();
  Scenario arc = scenario_from_route(1, spec, cfg);

  Scenario cut = inject_anomaly(arc, Tag::corner_cut, 1, cfg);
  const auto orig = future_meters(arc, cfg);
  const auto mod = future_meters(cut, cfg);

  // chord endpoints = boundary of the modified range
  int first = -1, last = -1;
  for (int i = 0; i < kHorizon; ++i) {
    if (orig[size_t(i)].x != mod[size_t(i)].x ||
        orig[size_t(i)].y != mod[size_t(i)].y) {
      if (first < 0) first = i;
      last = i;
    }
  }
  REQUIRE(first > 0);
  const Vec2 a = orig[size_t(first - 1)], b = orig[size_t(last + 1)];
  const double c = std::hypot(b.x - a.x, b.y - a.y);
  const double R = 20.0;
  const double sagitta = R - std::sqrt(R * R - 0.25 * c * c);

  // deviation from the original circle (center (0, R))
  double max_dev = 0.0;
  for (int i = first; i <= last; ++i) {
    const double dist = std::hypot(mod[size_t(i)].x, mod[size_t(i)].y - R);
    max_dev = std::max(max_dev, R - dist);
  }
  CHECK(max_dev == doctest::Approx(sagitta).epsilon(0.03));
  CHECK(sagitta > 0.5);  // the cut is material, not a numerical whisper
}

TEST_CASE("jitter with zero sigma is the identity") {
  GeneratorConfig cfg = default_cfg();
  cfg.jitter_sigma = 0.0;
  Scenario s = generate_expert(5, cfg);
  Scenario j = inject_anomaly(s, Tag::jitter, 19, cfg);
  for (size_t i = 0; i < s.future.size(); ++i) {
    CHECK(j.future[i].x == s.future[i].x);
    CHECK(j.future[i].y == s.future[i].y);
  }
}

TEST_CASE("injection preconditions") {
  const GeneratorConfig cfg = default_cfg();
  Scenario s = generate_expert(2, cfg);
  CHECK_THROWS_AS(inject_anomaly(s, Tag::nominal, 1, cfg), SpecError);
  Scenario sw = inject_anomaly(s, Tag::swerve, 1, cfg);
  CHECK_THROWS_AS(inject_anomaly(sw, Tag::jitter, 1, cfg), SpecError);
}

TEST_CASE("build_dataset invariants on a small split") {
  GeneratorConfig cfg = default_cfg();
  cfg.n_train = 40;
  cfg.n_val = 50;
  cfg.val_anomaly_frac = 0.08;
  DatasetSplit ds = build_dataset(cfg, 77);

  REQUIRE(ds.train.size() == 40);
  REQUIRE(ds.val.size() == 50);
  for (const Scenario& s : ds.train) CHECK(s.anomaly_tag == Tag::nominal);

  int anomalies = 0;
  for (const Scenario& s : ds.val)
    if (s.anomaly_tag != Tag::nominal) ++anomalies;
  CHECK(anomalies == 4);  // round(0.08 * 50)

  SUBCASE("deterministic rebuild") {
    DatasetSplit again = build_dataset(cfg, 77);
    for (size_t i = 0; i < ds.val.size(); ++i) {
      CHECK(ds.val[i].anomaly_tag == again.val[i].anomaly_tag);
      for (size_t p = 0; p < ds.val[i].future.size(); ++p) {
        CHECK(ds.val[i].future[p].x == again.val[i].future[p].x);
        CHECK(ds.val[i].future[p].y == again.val[i].future[p].y);
      }
    }
  }

  SUBCASE("seeds are disjoint train/val ranges") {
    for (size_t i = 0; i < ds.train.size(); ++i)
      CHECK(ds.train[i].seed == 77 + i);
    for (size_t j = 0; j < ds.val.size(); ++j)
      CHECK(ds.val[j].seed == 77 + 40 + j);
  }
}

TEST_CASE("config contract violations are rejected") {
  GeneratorConfig bad = default_cfg();
  bad.speed_max = 45.0;
  CHECK_THROWS_AS(bad.validate(), SpecError);
  bad = default_cfg();
  bad.curvature_max = 0.5;
  CHECK_THROWS_AS(bad.validate(), SpecError);
  bad = default_cfg();
  bad.brake_decel = 4.0;
  CHECK_THROWS_AS(bad.validate(), SpecError);
}

}  // TEST_SUITE
