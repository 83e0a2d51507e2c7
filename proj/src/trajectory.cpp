#include "specflow/trajectory.hpp"

#include <cmath>
#include <numbers>

#include "specflow/errors.hpp"

namespace specflow {

const char* tag_name(Tag t) {
  switch (t) {
    case Tag::nominal:        return "nominal";
    case Tag::hard_brake:     return "hard_brake";
    case Tag::swerve:         return "swerve";
    case Tag::lane_violation: return "lane_violation";
    case Tag::corner_cut:     return "corner_cut";
    case Tag::jitter:         return "jitter";
  }
  return "nominal";
}

Tag tag_from_name(const std::string& name) {
  for (int i = 0; i < kTagCount; ++i)
    if (name == tag_name(Tag(i))) return Tag(i);
  fail(ErrClass::ParseError, "unknown anomaly_tag '" + name + "'");
}

Vector flatten(const std::vector<Vec2>& points) {
  Vector v(points.size() * 2);
  for (size_t i = 0; i < points.size(); ++i) {
    v[2 * i] = points[i].x;
    v[2 * i + 1] = points[i].y;
  }
  return v;
}

std::vector<Vec2> unflatten(const Vector& flat) {
  require(flat.size() % 2 == 0, ErrClass::BadInput, "odd flat vector length");
  std::vector<Vec2> p(flat.size() / 2);
  for (size_t i = 0; i < p.size(); ++i) p[i] = {flat[2 * i], flat[2 * i + 1]};
  return p;
}

std::vector<Vec2> scaled(const std::vector<Vec2>& points, double factor) {
  std::vector<Vec2> out(points.size());
  for (size_t i = 0; i < points.size(); ++i)
    out[i] = {points[i].x * factor, points[i].y * factor};
  return out;
}

double path_length(const std::vector<Vec2>& p) {
  double s = 0.0;
  for (size_t i = 1; i < p.size(); ++i)
    s += std::hypot(p[i].x - p[i - 1].x, p[i].y - p[i - 1].y);
  return s;
}

std::vector<double> segment_speeds(const std::vector<Vec2>& p, double dt) {
  std::vector<double> v(p.size() > 0 ? p.size() - 1 : 0);
  for (size_t i = 0; i + 1 < p.size(); ++i)
    v[i] = std::hypot(p[i + 1].x - p[i].x, p[i + 1].y - p[i].y) / dt;
  return v;
}

std::vector<double> segment_headings(const std::vector<Vec2>& p) {
  constexpr double kDegenerate = 1e-9;
  std::vector<double> h(p.size() > 0 ? p.size() - 1 : 0);
  double last = 0.0;
  bool seen = false;
  for (size_t i = 0; i + 1 < p.size(); ++i) {
    const double dx = p[i + 1].x - p[i].x;
    const double dy = p[i + 1].y - p[i].y;
    double ang;
    if (std::hypot(dx, dy) < kDegenerate) {
      ang = last;  // carry forward over stationary segments
    } else {
      ang = std::atan2(dy, dx);
      if (seen) {
        // unwrap onto the branch nearest the previous heading
        const double tau = 2.0 * std::numbers::pi;
        ang = last + std::remainder(ang - last, tau);
      }
      seen = true;
    }
    h[i] = ang;
    last = ang;
  }
  return h;
}

}  // namespace specflow
