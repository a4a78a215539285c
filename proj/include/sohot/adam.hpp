#pragma once

#include "sohot/types.hpp"

#include <cmath>

namespace sohot {

/// Per-parameter-vector Adam state with bias correction.
struct AdamState {
  long step_count = 0;
  Vector first_moment;
  Vector second_moment;
  double learning_rate = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_stability = 1e-8;

  AdamState() = default;
  AdamState(Eigen::Index dim, double lr) : learning_rate(lr) {
    first_moment = Vector::Zero(dim);
    second_moment = Vector::Zero(dim);
  }
};

/// One Adam step in place. Deterministic given (state, params, grads).
inline void adam_update(AdamState& state, Eigen::Ref<Vector> params, const Vector& grads) {
  detail::require(params.size() == grads.size() &&
                      state.first_moment.size() == params.size() &&
                      state.second_moment.size() == params.size(),
                  "adam_update: length mismatch");
  state.step_count += 1;
  const double b1 = state.beta1;
  const double b2 = state.beta2;
  state.first_moment = b1 * state.first_moment + (1.0 - b1) * grads;
  state.second_moment =
      (b2 * state.second_moment.array() + (1.0 - b2) * grads.array().square()).matrix();
  const double bias1 = 1.0 - std::pow(b1, static_cast<double>(state.step_count));
  const double bias2 = 1.0 - std::pow(b2, static_cast<double>(state.step_count));
  const Eigen::ArrayXd m_hat = state.first_moment.array() / bias1;
  const Eigen::ArrayXd v_hat = state.second_moment.array() / bias2;
  params.array() -= state.learning_rate * m_hat / (v_hat.sqrt() + state.eps_stability);
}

}  // namespace sohot
