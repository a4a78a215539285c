#pragma once

#include "sohot/types.hpp"

#include <cmath>

namespace sohot {

/// Numerically stable softmax (max-subtraction).
inline Vector softmax(const Vector& logits) {
  const double shift = logits.maxCoeff();
  Vector e = (logits.array() - shift).exp();
  return e / e.sum();
}

struct CrossEntropyResult {
  double loss = 0.0;
  Vector grad_logits;  // softmax(logits) - onehot(true_class)
};

/// Softmax cross-entropy loss and its gradient w.r.t. the logits.
/// The gradient entries sum to zero by construction.
inline CrossEntropyResult softmax_cross_entropy(const Vector& logits, int true_class) {
  detail::require(true_class >= 0 && true_class < logits.size(),
                  "softmax_cross_entropy: true_class out of range");
  const double shift = logits.maxCoeff();
  const Eigen::ArrayXd shifted = logits.array() - shift;
  const double log_sum_exp = std::log(shifted.exp().sum());
  CrossEntropyResult r;
  r.loss = log_sum_exp - shifted[true_class];
  r.grad_logits = (shifted - log_sum_exp).exp().matrix();
  r.grad_logits[true_class] -= 1.0;
  return r;
}

/// Cross-entropy of an already-normalized probability vector, clamped away
/// from log(0). Used for learners that predict probabilities directly.
inline double cross_entropy_from_proba(const Vector& proba, int true_class) {
  detail::require(true_class >= 0 && true_class < proba.size(),
                  "cross_entropy_from_proba: true_class out of range");
  const double p = std::max(proba[true_class], 1e-15);
  return -std::log(p);
}

}  // namespace sohot
