#pragma once

#include "sohot/types.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace sohot {

/// Univariate split test "x[feature] < threshold ?".
struct SplitTest {
  int feature = -1;
  double threshold = 0.0;
};

/// Incremental per-(feature, class) Gaussian summary (Welford).
struct GaussianObserver {
  long count = 0;
  double mean = 0.0;
  double m2 = 0.0;  // sum of squared deviations

  void add(double value) {
    count += 1;
    const double delta = value - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (value - mean);
  }

  double variance() const {
    return count >= 2 ? m2 / static_cast<double>(count - 1) : 0.0;
  }

  /// Estimated mass of this class falling strictly below `threshold`.
  double mass_below(double threshold) const {
    if (count == 0) return 0.0;
    const double var = variance();
    if (var <= 0.0) return mean < threshold ? static_cast<double>(count) : 0.0;
    const double z = (threshold - mean) / std::sqrt(var);
    return static_cast<double>(count) * 0.5 * std::erfc(-z / std::sqrt(2.0));
  }
};

/// Sufficient statistics a leaf collects to evaluate split candidates:
/// class counts, per-feature per-class Gaussian observers and the observed
/// per-feature range.
class LeafStats {
 public:
  LeafStats() = default;
  LeafStats(int n_features, int n_classes)
      : class_counts_(n_classes, 0),
        observers_(static_cast<std::size_t>(n_features) * n_classes),
        feature_min_(n_features, std::numeric_limits<double>::infinity()),
        feature_max_(n_features, -std::numeric_limits<double>::infinity()),
        n_features_(n_features),
        n_classes_(n_classes) {}

  void add(const Vector& x, int label) {
    detail::require(label >= 0 && label < n_classes_, "LeafStats::add: label out of range");
    detail::require(x.size() == n_features_, "LeafStats::add: feature length mismatch");
    class_counts_[label] += 1;
    total_count_ += 1;
    samples_since_last_attempt_ += 1;
    for (int f = 0; f < n_features_; ++f) {
      observer(f, label).add(x[f]);
      feature_min_[f] = std::min(feature_min_[f], x[f]);
      feature_max_[f] = std::max(feature_max_[f], x[f]);
    }
  }

  long total_count() const { return total_count_; }
  long class_count(int c) const { return class_counts_[c]; }
  const std::vector<long>& class_counts() const { return class_counts_; }
  int n_features() const { return n_features_; }
  int n_classes() const { return n_classes_; }
  double feature_min(int f) const { return feature_min_[f]; }
  double feature_max(int f) const { return feature_max_[f]; }

  int classes_present() const {
    int present = 0;
    for (long c : class_counts_)
      if (c > 0) present += 1;
    return present;
  }

  const GaussianObserver& observer(int feature, int label) const {
    return observers_[static_cast<std::size_t>(feature) * n_classes_ + label];
  }
  GaussianObserver& observer(int feature, int label) {
    return observers_[static_cast<std::size_t>(feature) * n_classes_ + label];
  }

  long samples_since_last_attempt() const { return samples_since_last_attempt_; }
  void reset_split_attempt_counter() { samples_since_last_attempt_ = 0; }

 private:
  std::vector<long> class_counts_;
  std::vector<GaussianObserver> observers_;
  std::vector<double> feature_min_;
  std::vector<double> feature_max_;
  long total_count_ = 0;
  long samples_since_last_attempt_ = 0;
  int n_features_ = 0;
  int n_classes_ = 0;
};

/// One ranked split candidate. The null candidate (feature == -1) stands for
/// "do not split" and always carries gain 0.
struct SplitCandidate {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
  bool is_null() const { return feature < 0; }
};

struct SplitDecision {
  bool should_split = false;
  SplitCandidate best;
  SplitCandidate second;
  double delta_gain = 0.0;
  double epsilon = 0.0;
};

/// Hoeffding bound eps = sqrt(R^2 ln(1/delta) / (2 n)); strictly decreasing in n.
double hoeffding_bound(double range, double delta, long n);

/// Entropy in bits of a count/mass distribution.
double entropy_bits(const std::vector<double>& masses);

/// Information gain (bits) of the test "x[feature] < threshold" against the
/// leaf's Gaussian summaries.
double information_gain(const LeafStats& stats, int feature, double threshold);

/// Candidate thresholds for a feature: 10 equally spaced interior points of
/// the observed range.
std::vector<double> candidate_thresholds(const LeafStats& stats, int feature, int n_points = 10);

/// All candidates (per-feature best plus the null split), ranked best-first.
/// Ties rank the null split first, then lower feature indices.
std::vector<SplitCandidate> rank_split_candidates(const LeafStats& stats);

/// The Hoeffding split decision on a leaf's statistics: split when the best
/// real candidate beats the runner-up by more than eps, or when eps has
/// shrunk below the tie-break threshold tau. Never splits when fewer than
/// two classes have been observed.
SplitDecision decide_split(const LeafStats& stats, double delta, double tau);

}  // namespace sohot
