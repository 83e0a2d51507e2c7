#pragma once

#include <vector>

#include "specflow/trajectory.hpp"

namespace specflow {

// Importance weight of one trajectory: tortuosity times exponentiated jerk
// energy. Always computed on meter-scale coordinates.
struct ComplexityWeight {
  double tau = 1.0;          // path length / net displacement, >= 1
  double jerk_factor = 1.0;  // exp(alpha * integral of squared jerk), >= 1
  double weight = 1.0;       // tau * jerk_factor
};

inline constexpr double kDefaultAlpha = 0.05;
inline constexpr double kJerkExpClamp = 50.0;
inline constexpr double kMinDisplacement = 0.5;  // meters
inline constexpr double kTortuosityCap = 10.0;   // near-stationary fallback

// Near-stationary trajectories (net displacement below kMinDisplacement)
// get the capped value instead of a division blow-up.
double tortuosity(const std::vector<Vec2>& points_m);

// exp(alpha * sum_t ||third difference / dt^3||^2 * dt), exponent clamped
// at kJerkExpClamp so jitter-class inputs cannot overflow.
double jerk_energy(const std::vector<Vec2>& points_m, double alpha, double dt);

ComplexityWeight complexity_weight(const std::vector<Vec2>& points_m,
                                   double alpha, double dt);

// w_i * B / sum(w); mean of the result is exactly 1
std::vector<double> batch_normalize(const std::vector<double>& weights);

}  // namespace specflow
