#include "sohot/split_finder.hpp"

#include <algorithm>

namespace sohot {

double hoeffding_bound(double range, double delta, long n) {
  detail::require(n >= 1, "hoeffding_bound: n must be >= 1");
  detail::require(delta > 0.0 && delta < 1.0, "hoeffding_bound: delta must be in (0, 1)");
  return std::sqrt(range * range * std::log(1.0 / delta) / (2.0 * static_cast<double>(n)));
}

double entropy_bits(const std::vector<double>& masses) {
  double total = 0.0;
  for (double m : masses) total += m;
  if (total <= 0.0) return 0.0;
  double h = 0.0;
  for (double m : masses) {
    if (m <= 0.0) continue;
    const double p = m / total;
    h -= p * std::log2(p);
  }
  return h;
}

double information_gain(const LeafStats& stats, int feature, double threshold) {
  const int k = stats.n_classes();
  std::vector<double> left(k, 0.0), right(k, 0.0), all(k, 0.0);
  double left_total = 0.0, right_total = 0.0;
  for (int c = 0; c < k; ++c) {
    const double n_c = static_cast<double>(stats.observer(feature, c).count);
    if (n_c <= 0.0) continue;
    const double below = stats.observer(feature, c).mass_below(threshold);
    left[c] = below;
    right[c] = n_c - below;
    all[c] = n_c;
    left_total += left[c];
    right_total += right[c];
  }
  const double total = left_total + right_total;
  if (total <= 0.0 || left_total <= 0.0 || right_total <= 0.0) return 0.0;
  const double h_parent = entropy_bits(all);
  const double h_split =
      (left_total / total) * entropy_bits(left) + (right_total / total) * entropy_bits(right);
  return h_parent - h_split;
}

std::vector<double> candidate_thresholds(const LeafStats& stats, int feature, int n_points) {
  std::vector<double> points;
  const double lo = stats.feature_min(feature);
  const double hi = stats.feature_max(feature);
  if (!(hi > lo)) return points;
  points.reserve(n_points);
  for (int i = 1; i <= n_points; ++i) {
    points.push_back(lo + (hi - lo) * static_cast<double>(i) / (n_points + 1.0));
  }
  return points;
}

std::vector<SplitCandidate> rank_split_candidates(const LeafStats& stats) {
  std::vector<SplitCandidate> candidates;
  candidates.push_back(SplitCandidate{});  // null split, gain 0
  for (int f = 0; f < stats.n_features(); ++f) {
    SplitCandidate best_for_feature;
    best_for_feature.feature = f;
    best_for_feature.gain = -1.0;
    for (double theta : candidate_thresholds(stats, f)) {
      const double g = information_gain(stats, f, theta);
      if (g > best_for_feature.gain) {
        best_for_feature.gain = g;
        best_for_feature.threshold = theta;
      }
    }
    if (best_for_feature.gain >= 0.0) candidates.push_back(best_for_feature);
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const SplitCandidate& a, const SplitCandidate& b) {
                     if (a.gain != b.gain) return a.gain > b.gain;
                     if (a.is_null() != b.is_null()) return a.is_null();
                     return a.feature < b.feature;
                   });
  return candidates;
}

SplitDecision decide_split(const LeafStats& stats, double delta, double tau) {
  SplitDecision decision;
  if (stats.total_count() < 1 || stats.classes_present() < 2) return decision;
  auto ranked = rank_split_candidates(stats);
  decision.best = ranked[0];
  decision.second = ranked.size() > 1 ? ranked[1] : SplitCandidate{};
  decision.delta_gain = decision.best.gain - decision.second.gain;
  const double range = std::log2(static_cast<double>(stats.n_classes()));
  decision.epsilon = hoeffding_bound(range, delta, stats.total_count());
  decision.should_split =
      !decision.best.is_null() &&
      (decision.delta_gain > decision.epsilon || decision.epsilon < tau);
  return decision;
}

}  // namespace sohot
