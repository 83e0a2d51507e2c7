#include "specflow/synth.hpp"

#include <algorithm>
#include <cmath>

#include "specflow/errors.hpp"

namespace specflow {

namespace {

// quintic smoothstep: C2 with bounded third derivative (|S'''| <= 60)
double s5(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  return u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
}

double ramp(double t, double t0, double len) {
  if (len <= 0.0) return t >= t0 ? 1.0 : 0.0;
  return s5((t - t0) / len);
}

// noise ramps in over the first 2 s so nothing kinks at the anchor
double noise_env(double t) { return s5(t / 2.0); }

double wave_sum(const std::vector<RouteSpec::Wave>& waves, double t) {
  double s = 0.0;
  for (const auto& w : waves) s += w.amp * std::sin(w.omega * t + w.phase);
  return s;
}

double speed_at(const RouteSpec& r, double t) {
  double v = r.v0;
  if (r.has_speed_change) v += r.dv * ramp(t, r.speed_t0, r.speed_len);
  if (!r.long_waves.empty()) v += noise_env(t) * wave_sum(r.long_waves, t);
  return v;
}

double kappa_at(const RouteSpec& r, double t) {
  if (r.kappa == 0.0) return 0.0;
  const double up = ramp(t, r.kappa_t0, r.kappa_ramp);
  const double down =
      ramp(t, r.kappa_t0 + r.kappa_ramp + r.kappa_hold, r.kappa_ramp);
  return r.kappa * (up - down);
}

double lateral_at(const RouteSpec& r, double t) {
  double d = 0.0;
  if (r.has_lane_change) d += r.lc_offset * ramp(t, r.lc_t0, r.lc_len);
  if (!r.lat_waves.empty()) d += noise_env(t) * wave_sum(r.lat_waves, t);
  return d;
}

Vec2 normal_of(double phi) { return {-std::sin(phi), std::cos(phi)}; }

std::vector<double> cumulative_lengths(const std::vector<Vec2>& p) {
  std::vector<double> s(p.size(), 0.0);
  for (size_t i = 1; i < p.size(); ++i)
    s[i] = s[i - 1] + std::hypot(p[i].x - p[i - 1].x, p[i].y - p[i - 1].y);
  return s;
}

// linear interpolation along a polyline by arc length; `hint` keeps the
// segment search monotone for increasing queries
Vec2 point_at_arclength(const std::vector<Vec2>& p,
                        const std::vector<double>& cum, double s,
                        size_t& hint) {
  if (s <= 0.0) return p.front();
  if (s >= cum.back()) return p.back();
  while (hint + 1 < cum.size() && cum[hint + 1] < s) ++hint;
  const double seg = cum[hint + 1] - cum[hint];
  const double u = seg > 0.0 ? (s - cum[hint]) / seg : 0.0;
  return {p[hint].x + u * (p[hint + 1].x - p[hint].x),
          p[hint].y + u * (p[hint + 1].y - p[hint].y)};
}

// future with the (0,0) anchor prepended: injector kinematics (speeds,
// headings) are anchored the same way the golden labeler sees them
std::vector<Vec2> with_anchor(const std::vector<Vec2>& future_m) {
  std::vector<Vec2> full;
  full.reserve(future_m.size() + 1);
  full.push_back({0.0, 0.0});
  full.insert(full.end(), future_m.begin(), future_m.end());
  return full;
}

}  // namespace

void GeneratorConfig::validate() const {
  require(n_train >= 1 && n_val >= 1, ErrClass::BadConfig,
          "dataset counts must be >= 1");
  require(val_anomaly_frac >= 0.0 && val_anomaly_frac <= 1.0,
          ErrClass::BadConfig, "val_anomaly_frac outside [0,1]");
  require(speed_min >= 0.0 && speed_max <= 30.0 && speed_min < speed_max,
          ErrClass::BadConfig, "speeds must satisfy 0 <= min < max <= 30");
  require(curvature_max > 0.0 && curvature_max <= 0.2, ErrClass::BadConfig,
          "curvature_max outside (0, 0.2]");
  require(jerk_max > 0.0, ErrClass::BadConfig, "jerk_max must be positive");
  require(accel_lat_max > 0.0, ErrClass::BadConfig,
          "accel_lat_max must be positive");
  require(noise_lat >= 0.0 && noise_long >= 0.0, ErrClass::BadConfig,
          "noise amplitudes must be non-negative");
  require(brake_decel >= 6.0, ErrClass::BadConfig, "brake_decel below 6");
  require(swerve_yaw >= 2.0, ErrClass::BadConfig, "swerve_yaw below 2");
  require(violation_offset_min >= 1.5 &&
              violation_offset_max >= violation_offset_min,
          ErrClass::BadConfig, "violation offsets must be >= 1.5");
  require(violation_hold >= 2.0, ErrClass::BadConfig,
          "violation_hold below 2 s");
  require(jitter_sigma >= 0.0, ErrClass::BadConfig, "negative jitter_sigma");
  require(scale > 0.0, ErrClass::BadConfig, "scale must be positive");
}

RouteSpec sample_route(Rng& rng, const GeneratorConfig& cfg) {
  RouteSpec r;
  const double pk = rng.uniform();
  if (pk < 0.22)      r.kind = RouteSpec::Kind::straight;
  else if (pk < 0.48) r.kind = RouteSpec::Kind::arc;
  else if (pk < 0.70) r.kind = RouteSpec::Kind::apex;
  else if (pk < 0.90) r.kind = RouteSpec::Kind::lane_change;
  else                r.kind = RouteSpec::Kind::wander;

  r.v0 = rng.uniform(cfg.speed_min, cfg.speed_max);

  const bool curved =
      r.kind == RouteSpec::Kind::arc || r.kind == RouteSpec::Kind::apex;
  if (rng.uniform() < 0.7) {
    // jerk budget: |dv| * 5.77 / speed_len^2 stays under ~1.3 m/s^3, and
    // the 2*v*v'*kappa cross term stays small on curved routes
    r.has_speed_change = true;
    const double dv_max = curved ? 2.0 : 3.0;
    r.dv = rng.uniform(-dv_max, dv_max);
    r.dv = std::clamp(r.dv, 2.0 - r.v0, 28.0 - r.v0);
    r.speed_t0 = rng.uniform(0.5, 3.5);
    r.speed_len = rng.uniform(3.0, 4.5);
  }

  if (curved) {
    // sample by lateral acceleration so comfort bounds hold at any speed
    const double a_lat = rng.uniform(0.3, std::min(cfg.accel_lat_max, 1.5));
    const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
    r.kappa = sign * std::min(a_lat / (r.v0 * r.v0), cfg.curvature_max);
    r.kappa_t0 = rng.uniform(0.3, 1.2);
    r.kappa_ramp = rng.uniform(2.0, 2.8);
    r.kappa_hold = r.kind == RouteSpec::Kind::apex
                       ? rng.uniform(1.5, 3.0)
                       : 1e9;
  } else if (r.kind == RouteSpec::Kind::lane_change) {
    const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
    r.has_lane_change = true;
    r.lc_offset = sign * rng.uniform(2.2, 3.6);
    r.lc_t0 = rng.uniform(0.4, 1.6);
    r.lc_len = rng.uniform(4.8, 6.0);  // 60*|d|/len^3 <= ~2 m/s^3
  } else if (r.kind == RouteSpec::Kind::wander) {
    for (int i = 0; i < 2; ++i) {
      RouteSpec::Wave w;
      w.amp = rng.uniform(0.15, 0.35);
      w.omega = rng.uniform(0.4, 1.1);
      w.phase = rng.uniform(0.0, 6.283185307179586);
      r.lat_waves.push_back(w);
    }
  }

  // universal within-lane texture; per-wave jerk caps 0.35 (lat) and
  // 0.25 (long) keep the worst-case total below jerk_max with margin
  for (int i = 0; i < 3; ++i) {
    RouteSpec::Wave w;
    w.omega = rng.uniform(0.5, 11.0);
    const double cap = 0.35 / (w.omega * w.omega * w.omega);
    w.amp = std::min(cfg.noise_lat, cap) * rng.uniform(0.5, 1.0);
    w.phase = rng.uniform(0.0, 6.283185307179586);
    r.lat_waves.push_back(w);
  }
  for (int i = 0; i < 3; ++i) {
    RouteSpec::Wave w;
    w.omega = rng.uniform(0.5, 8.0);
    const double cap = 0.25 / (w.omega * w.omega);
    w.amp = std::min(cfg.noise_long, cap) * rng.uniform(0.5, 1.0);
    w.phase = rng.uniform(0.0, 6.283185307179586);
    r.long_waves.push_back(w);
  }
  return r;
}

ComposedRoute compose_route(const RouteSpec& spec) {
  ComposedRoute out;

  // base unicycle integration, arc-exact per substep: piecewise-constant
  // (v, kappa) substeps advance along an exact circle segment, so constant
  // configurations reproduce closed-form geometry to roundoff
  constexpr int kSub = 10;
  const double h = kDt / kSub;
  double x = 0.0, y = 0.0, phi = 0.0;
  std::vector<Vec2> base(kHorizon + 1);
  std::vector<double> heads(kHorizon + 1, 0.0);
  base[0] = {0.0, 0.0};
  for (int i = 0; i < kHorizon; ++i) {
    for (int s = 0; s < kSub; ++s) {
      const double tm = (i + (s + 0.5) / kSub) * kDt;
      const double vm = speed_at(spec, tm);
      const double km = kappa_at(spec, tm);
      const double dphi = vm * km * h;
      if (std::fabs(km) > 1e-12) {
        const double r = 1.0 / km;
        x += r * (std::sin(phi + dphi) - std::sin(phi));
        y -= r * (std::cos(phi + dphi) - std::cos(phi));
      } else {
        x += vm * h * std::cos(phi);
        y += vm * h * std::sin(phi);
      }
      phi += dphi;
    }
    base[i + 1] = {x, y};
    heads[i + 1] = phi;
  }

  out.future_m.resize(kHorizon);
  for (int i = 0; i < kHorizon; ++i) {
    const double t = (i + 1) * kDt;
    const Vec2 n = normal_of(heads[i + 1]);
    const double d = lateral_at(spec, t);
    out.future_m[i] = {base[i + 1].x + n.x * d, base[i + 1].y + n.y * d};
  }

  // goal lane: clean centerline of the destination lane, sampled every
  // 0.4 s; for a lane change the full offset applies from the start
  out.goal_m.resize(kGoalPoints);
  const double lane_d = spec.has_lane_change ? spec.lc_offset : 0.0;
  for (int j = 0; j < kGoalPoints; ++j) {
    const int idx = 4 * (j + 1);
    const Vec2 n = normal_of(heads[idx]);
    out.goal_m[j] = {base[idx].x + n.x * lane_d, base[idx].y + n.y * lane_d};
  }

  // pre-anchor motion is exactly straight at v0 (all profiles engage after
  // t=0), which keeps the anchor-at-origin/+x invariant trivially true
  out.history_m.resize(kHistoryLen);
  for (int j = 0; j < kHistoryLen; ++j) {
    const double t = (j - (kHistoryLen - 1)) * kDt;
    out.history_m[j] = {spec.v0 * t, 0.0, spec.v0, 0.0, 0.0};
  }
  return out;
}

namespace {

Scenario assemble_normalized(uint64_t seed, const ComposedRoute& route,
                             double scale) {
  Scenario s;
  s.seed = seed;
  s.anomaly_tag = Tag::nominal;
  const double inv = 1.0 / scale;
  s.future = scaled(route.future_m, inv);
  s.context.goal_lane = scaled(route.goal_m, inv);
  s.context.history.resize(route.history_m.size());
  for (size_t i = 0; i < route.history_m.size(); ++i) {
    const HistFrame& f = route.history_m[i];
    s.context.history[i] = {f.x * inv, f.y * inv, f.vx * inv, f.vy * inv,
                            f.heading};
  }
  return s;
}

}  // namespace

Scenario generate_expert(uint64_t seed, const GeneratorConfig& cfg) {
  cfg.validate();
  Rng rng(mix_seed(seed, 0x5eedULL));
  const RouteSpec spec = sample_route(rng, cfg);
  return assemble_normalized(seed, compose_route(spec), cfg.scale);
}

Scenario scenario_from_route(uint64_t seed, const RouteSpec& spec,
                             const GeneratorConfig& cfg) {
  cfg.validate();
  return assemble_normalized(seed, compose_route(spec), cfg.scale);
}

// ---- anomaly injectors (meter-scale futures) ----

namespace {

std::vector<Vec2> inject_hard_brake(const std::vector<Vec2>& future_m,
                                    Rng& rng, const GeneratorConfig& cfg) {
  const std::vector<Vec2> full = with_anchor(future_m);
  const std::vector<double> cum = cumulative_lengths(full);
  const int b = 15 + int(rng.bounded(31));  // onset at 1.5 .. 4.5 s
  const double v_start = (cum[size_t(b + 1)] - cum[size_t(b)]) / kDt;
  constexpr double kFloor = 0.3;

  std::vector<Vec2> out = future_m;
  double s = cum[size_t(b)];
  size_t hint = 0;
  for (int i = b; i < kHorizon; ++i) {
    // braking decelerates faster than any nominal profile changes speed,
    // so s never overruns the original arc length
    const double v = std::max(kFloor, v_start - cfg.brake_decel * (i - b) * kDt);
    s += v * kDt;
    out[size_t(i)] = point_at_arclength(full, cum, s, hint);
  }
  return out;
}

std::vector<Vec2> inject_swerve(const std::vector<Vec2>& future_m, Rng& rng,
                                const GeneratorConfig& cfg) {
  const std::vector<Vec2> full = with_anchor(future_m);
  const std::vector<double> heads = segment_headings(full);
  const int n_seg = int(heads.size());
  const int onset = 10 + int(rng.bounded(46));  // 1.0 .. 5.5 s
  const double r = cfg.swerve_yaw;

  // zig-zag-zig heading offset: +r for 0.3 s, -r for 0.6 s, +r for 0.3 s;
  // returns to zero, leaving a lateral jog but no net heading change
  auto delta = [&](int seg) {
    const double tau = (seg - onset) * kDt;
    if (tau <= 0.0) return 0.0;
    if (tau <= 0.3) return r * tau;
    if (tau <= 0.9) return r * 0.3 - r * (tau - 0.3);
    if (tau <= 1.2) return -r * 0.3 + r * (tau - 0.9);
    return 0.0;
  };

  std::vector<Vec2> out = future_m;
  Vec2 p = full[size_t(onset)];
  for (int seg = onset; seg < n_seg; ++seg) {
    const double len = std::hypot(full[size_t(seg + 1)].x - full[size_t(seg)].x,
                                  full[size_t(seg + 1)].y - full[size_t(seg)].y);
    const double a = heads[size_t(seg)] + delta(seg);
    p = {p.x + len * std::cos(a), p.y + len * std::sin(a)};
    out[size_t(seg)] = p;  // out index seg == full index seg+1 shifted by anchor
  }
  return out;
}

std::vector<Vec2> inject_lane_violation(const std::vector<Vec2>& future_m,
                                        Rng& rng,
                                        const GeneratorConfig& cfg) {
  const std::vector<Vec2> full = with_anchor(future_m);
  const std::vector<double> heads = segment_headings(full);
  const double mag =
      rng.uniform(cfg.violation_offset_min, cfg.violation_offset_max);
  const double d = rng.uniform() < 0.5 ? mag : -mag;
  const double ramp_len = 1.8;
  const double hold = cfg.violation_hold + rng.uniform(0.0, 0.8);
  const double t0 = rng.uniform(0.5, 1.5);
  const bool returns =
      rng.uniform() < 0.5 && t0 + 2.0 * ramp_len + hold <= 7.8;

  auto offset = [&](double t) {
    double w = s5((t - t0) / ramp_len);
    if (returns) w -= s5((t - t0 - ramp_len - hold) / ramp_len);
    return d * w;
  };

  std::vector<Vec2> out = future_m;
  for (int i = 0; i < kHorizon; ++i) {
    const Vec2 n = normal_of(heads[size_t(i)]);
    const double off = offset((i + 1) * kDt);
    out[size_t(i)] = {out[size_t(i)].x + n.x * off,
                      out[size_t(i)].y + n.y * off};
  }
  return out;
}

struct TurnWindow {
  int i0 = 0, i1 = 0;
  double turn = 0.0;
};

// widest heading change up to ~1.25 rad over 0.8 .. 6 s windows
TurnWindow find_turn_window(const std::vector<Vec2>& full) {
  const std::vector<double> heads = segment_headings(full);
  const int n = int(full.size());
  TurnWindow best;
  for (int i0 = 0; i0 + 8 < n - 1; ++i0) {
    const int hi = std::min(i0 + 60, n - 2);
    for (int i1 = i0 + 8; i1 <= hi; ++i1) {
      const double turn = std::fabs(heads[size_t(i1 - 1)] - heads[size_t(i0)]);
      if (turn <= 1.25 && turn > best.turn) best = {i0, i1, turn};
    }
  }
  return best;
}

std::vector<Vec2> inject_corner_cut(const std::vector<Vec2>& future_m) {
  const std::vector<Vec2> full = with_anchor(future_m);
  const TurnWindow w = find_turn_window(full);
  require(w.turn >= 0.35, ErrClass::BadInput,
          "corner_cut needs a turn of at least 0.35 rad");
  const std::vector<double> cum = cumulative_lengths(full);
  const Vec2 a = full[size_t(w.i0)], b = full[size_t(w.i1)];
  const double span = cum[size_t(w.i1)] - cum[size_t(w.i0)];

  std::vector<Vec2> out = future_m;
  for (int i = w.i0 + 1; i < w.i1; ++i) {
    const double u = (cum[size_t(i)] - cum[size_t(w.i0)]) / span;
    // plateau blend: pure chord across the middle half, smooth shoulders;
    // peak deviation from the arc is the exact chord sagitta
    double blend;
    if (u < 0.25)      blend = s5(u / 0.25);
    else if (u > 0.75) blend = s5((1.0 - u) / 0.25);
    else               blend = 1.0;
    const Vec2 q{a.x + u * (b.x - a.x), a.y + u * (b.y - a.y)};
    const Vec2 p = full[size_t(i)];
    out[size_t(i - 1)] = {p.x + blend * (q.x - p.x),
                          p.y + blend * (q.y - p.y)};
  }
  return out;
}

std::vector<Vec2> inject_jitter(const std::vector<Vec2>& future_m, Rng& rng,
                                double sigma) {
  if (sigma == 0.0) return future_m;
  std::vector<Vec2> out = future_m;
  for (auto& p : out) {
    p.x += sigma * rng.normal();
    p.y += sigma * rng.normal();
  }
  return out;
}

}  // namespace

bool corner_cut_feasible(const std::vector<Vec2>& future_m) {
  return find_turn_window(with_anchor(future_m)).turn >= 0.35;
}

Scenario inject_anomaly(const Scenario& s, Tag tag, uint64_t seed,
                        const GeneratorConfig& cfg) {
  require(s.anomaly_tag == Tag::nominal, ErrClass::BadInput,
          "inject_anomaly input must be nominal");
  require(tag != Tag::nominal, ErrClass::BadInput,
          "nothing to inject for tag 'nominal'");

  Rng rng(mix_seed(seed, uint64_t(tag)));
  const std::vector<Vec2> m = scaled(s.future, cfg.scale);
  std::vector<Vec2> modified;
  switch (tag) {
    case Tag::hard_brake:     modified = inject_hard_brake(m, rng, cfg); break;
    case Tag::swerve:         modified = inject_swerve(m, rng, cfg); break;
    case Tag::lane_violation: modified = inject_lane_violation(m, rng, cfg); break;
    case Tag::corner_cut:     modified = inject_corner_cut(m); break;
    case Tag::jitter:         modified = inject_jitter(m, rng, cfg.jitter_sigma); break;
    case Tag::nominal:        break;
  }
  for (const Vec2& p : modified)
    require(std::isfinite(p.x) && std::isfinite(p.y), ErrClass::NumericFailure,
            "injector produced non-finite point");

  Scenario out = s;
  out.anomaly_tag = tag;
  // only touched points go through the meters round-trip; untouched spans
  // (pre-onset prefixes, zero-sigma jitter) stay bitwise identical
  const double inv = 1.0 / cfg.scale;
  for (size_t i = 0; i < modified.size(); ++i)
    if (modified[i].x != m[i].x || modified[i].y != m[i].y)
      out.future[i] = {modified[i].x * inv, modified[i].y * inv};
  return out;
}

DatasetSplit build_dataset(const GeneratorConfig& cfg, uint64_t seed) {
  cfg.validate();
  DatasetSplit ds;
  ds.config = cfg;
  ds.seed = seed;

  ds.train.reserve(size_t(cfg.n_train));
  for (int i = 0; i < cfg.n_train; ++i)
    ds.train.push_back(generate_expert(seed + uint64_t(i), cfg));

  ds.val.reserve(size_t(cfg.n_val));
  for (int j = 0; j < cfg.n_val; ++j)
    ds.val.push_back(
        generate_expert(seed + uint64_t(cfg.n_train) + uint64_t(j), cfg));

  const int n_anom = int(std::llround(cfg.val_anomaly_frac * cfg.n_val));
  if (n_anom == 0) return ds;

  std::vector<int> idx(ds.val.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = int(i);
  Rng alloc(mix_seed(seed, 0xa110cULL));
  alloc.shuffle(idx);

  static constexpr Tag kRotation[5] = {Tag::hard_brake, Tag::swerve,
                                       Tag::lane_violation, Tag::corner_cut,
                                       Tag::jitter};
  std::vector<Tag> tags(static_cast<size_t>(n_anom));
  for (int a = 0; a < n_anom; ++a) tags[size_t(a)] = kRotation[a % 5];

  auto feasible = [&](int slot) {
    return corner_cut_feasible(
        scaled(ds.val[size_t(idx[size_t(slot)])].future, cfg.scale));
  };
  for (int a = 0; a < n_anom; ++a) {
    if (tags[size_t(a)] != Tag::corner_cut || feasible(a)) continue;
    bool swapped = false;
    for (int b = a + 1; b < n_anom && !swapped; ++b) {
      if (tags[size_t(b)] != Tag::corner_cut && feasible(b)) {
        std::swap(tags[size_t(a)], tags[size_t(b)]);
        swapped = true;
      }
    }
    if (!swapped) tags[size_t(a)] = Tag::swerve;  // curvature-free route
  }

  for (int a = 0; a < n_anom; ++a) {
    const size_t v = size_t(idx[size_t(a)]);
    ds.val[v] = inject_anomaly(ds.val[v], tags[size_t(a)],
                               mix_seed(seed, 0x1000000ULL + uint64_t(a)), cfg);
  }
  return ds;
}

}  // namespace specflow
