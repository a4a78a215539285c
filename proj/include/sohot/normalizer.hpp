#pragma once

#include "sohot/types.hpp"

#include <cmath>

namespace sohot {

/// Streaming input normalization: keeps exponential moving estimates of the
/// per-feature mean and variance and maps x to (x - mean) / sqrt(var + 1e-5).
/// Until the first training update the input passes through unchanged.
class RunningNormalizer {
 public:
  RunningNormalizer() = default;
  explicit RunningNormalizer(Eigen::Index dim, double momentum = 0.99)
      : momentum_(momentum),
        running_mean_(Vector::Zero(dim)),
        running_variance_(Vector::Zero(dim)) {
    detail::require(momentum > 0.0 && momentum <= 1.0,
                    "RunningNormalizer: momentum must be in (0, 1]");
  }

  Vector normalize(const Vector& x, bool training) {
    detail::require(x.size() == running_mean_.size(), "RunningNormalizer: length mismatch");
    if (training) update(x);
    if (count_ == 0) return x;
    return ((x - running_mean_).array() /
            (running_variance_.array() + kVarianceFloor).sqrt())
        .matrix();
  }

  long count() const { return count_; }
  const Vector& running_mean() const { return running_mean_; }
  const Vector& running_variance() const { return running_variance_; }

 private:
  void update(const Vector& x) {
    count_ += 1;
    if (count_ == 1) {
      running_mean_ = x;
      running_variance_ = Vector::Ones(x.size());
      return;
    }
    const double m = momentum_;
    const Vector delta_old = x - running_mean_;
    running_mean_ = m * running_mean_ + (1.0 - m) * x;
    const Vector delta_new = x - running_mean_;
    running_variance_ =
        (m * running_variance_.array() + (1.0 - m) * delta_old.array() * delta_new.array())
            .cwiseMax(0.0)
            .matrix();
  }

  static constexpr double kVarianceFloor = 1e-5;

  long count_ = 0;
  double momentum_ = 0.99;
  Vector running_mean_;
  Vector running_variance_;
};

}  // namespace sohot
