#pragma once

#include "sohot/types.hpp"

namespace sohot {

/// Gate width of the smooth-step function. Larger gamma -> softer routing,
/// gamma close to 0 -> nearly hard routing.
struct SmoothStepParams {
  double gamma = 1.0;
};

/// Piecewise-cubic gate: 0 for t <= -gamma/2, 1 for t >= gamma/2, and
/// -(2/g^3) t^3 + (3/(2g)) t + 1/2 in between. C1 everywhere and attains
/// exact zeros and ones, which is what makes conditional computation work.
template <typename Scalar>
Scalar smooth_step(Scalar t, Scalar gamma) {
  const Scalar half = gamma / Scalar(2);
  if (t <= -half) return Scalar(0);
  if (t >= half) return Scalar(1);
  const Scalar g3 = gamma * gamma * gamma;
  return Scalar(-2) / g3 * t * t * t + Scalar(3) / (Scalar(2) * gamma) * t + Scalar(0.5);
}

/// Derivative of smooth_step: exactly 0 outside (-gamma/2, gamma/2),
/// -(6/g^3) t^2 + 3/(2g) inside. Both one-sided limits at the boundary are 0.
template <typename Scalar>
Scalar smooth_step_derivative(Scalar t, Scalar gamma) {
  const Scalar half = gamma / Scalar(2);
  if (t <= -half || t >= half) return Scalar(0);
  const Scalar g3 = gamma * gamma * gamma;
  return Scalar(-6) / g3 * t * t + Scalar(3) / (Scalar(2) * gamma);
}

inline double smooth_step(double t, const SmoothStepParams& params) {
  detail::require(params.gamma > 0.0, "smooth_step: gamma must be positive");
  return smooth_step(t, params.gamma);
}

inline double smooth_step_derivative(double t, const SmoothStepParams& params) {
  detail::require(params.gamma > 0.0, "smooth_step_derivative: gamma must be positive");
  return smooth_step_derivative(t, params.gamma);
}

}  // namespace sohot
