#include "specflow/complexity.hpp"

#include <cmath>

#include "specflow/errors.hpp"

namespace specflow {

double tortuosity(const std::vector<Vec2>& points_m) {
  require(points_m.size() >= 2, ErrClass::BadInput,
          "tortuosity needs at least 2 points");
  const Vec2& a = points_m.front();
  const Vec2& b = points_m.back();
  const double net = std::hypot(b.x - a.x, b.y - a.y);
  if (net < kMinDisplacement) return kTortuosityCap;
  return path_length(points_m) / net;
}

double jerk_energy(const std::vector<Vec2>& points_m, double alpha,
                   double dt) {
  const size_t n = points_m.size();
  require(n >= 4, ErrClass::BadInput, "jerk energy needs at least 4 points");
  const double inv3 = 1.0 / (dt * dt * dt);
  double sum = 0.0;
  for (size_t i = 0; i + 3 < n; ++i) {
    const double jx = (points_m[i + 3].x - 3.0 * points_m[i + 2].x +
                       3.0 * points_m[i + 1].x - points_m[i].x) * inv3;
    const double jy = (points_m[i + 3].y - 3.0 * points_m[i + 2].y +
                       3.0 * points_m[i + 1].y - points_m[i].y) * inv3;
    sum += (jx * jx + jy * jy) * dt;
  }
  double expo = alpha * sum;
  if (expo > kJerkExpClamp) expo = kJerkExpClamp;
  return std::exp(expo);
}

ComplexityWeight complexity_weight(const std::vector<Vec2>& points_m,
                                   double alpha, double dt) {
  ComplexityWeight w;
  w.tau = tortuosity(points_m);
  w.jerk_factor = jerk_energy(points_m, alpha, dt);
  w.weight = w.tau * w.jerk_factor;
  return w;
}

std::vector<double> batch_normalize(const std::vector<double>& weights) {
  require(!weights.empty(), ErrClass::BadInput, "empty weight batch");
  double sum = 0.0;
  for (double w : weights) {
    require(std::isfinite(w) && w > 0.0, ErrClass::BadInput,
            "weights must be finite and positive");
    sum += w;
  }
  std::vector<double> out(weights.size());
  const double f = double(weights.size()) / sum;
  for (size_t i = 0; i < weights.size(); ++i) out[i] = weights[i] * f;
  return out;
}

}  // namespace specflow
