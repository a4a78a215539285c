#pragma once

#include "sohot/split_finder.hpp"
#include "sohot/types.hpp"

#include <iosfwd>
#include <memory>
#include <optional>

namespace sohot {

enum class LeafPrediction { MajorityClass, NaiveBayesAdaptive };

struct HoeffdingTreeConfig {
  int input_dim = 0;
  int class_count = 0;
  LeafPrediction leaf_prediction = LeafPrediction::NaiveBayesAdaptive;
  double delta = 1e-7;
  double tau = 0.05;
  long grace_period = 200;
  std::optional<long> internal_node_limit;  // node-capped variant when set
};

struct HTNode {
  int depth = 0;
  // leaf payload
  LeafStats stats;
  long nb_correct = 0;
  long mc_correct = 0;
  // internal payload
  SplitTest split;
  std::unique_ptr<HTNode> left;
  std::unique_ptr<HTNode> right;

  bool is_leaf() const { return left == nullptr; }
};

struct HTDiagnostics {
  long node_count = 1;
  long leaf_count = 1;
  int depth = 0;
};

/// Classic incremental Hoeffding tree: hard routing on univariate split
/// tests, Gaussian attribute observers in the leaves and the same
/// Hoeffding-bound split decision as the soft variant. Leaves predict either
/// Laplace-smoothed class frequencies or, in adaptive mode, the naive Bayes
/// posterior whenever it has been the more accurate of the two at that leaf.
class HoeffdingTree {
 public:
  explicit HoeffdingTree(const HoeffdingTreeConfig& config);

  Vector predict_proba(const Vector& x) const;
  /// One training instance. Returns the pre-update cross-entropy loss.
  double learn_one(const Vector& x, int y);

  long internal_node_count() const { return internal_count_; }
  HTDiagnostics diagnostics() const;
  void dump(std::ostream& os) const;
  const HoeffdingTreeConfig& config() const { return config_; }
  const HTNode& root() const { return *root_; }

  static Vector majority_class_proba(const LeafStats& stats);
  static Vector naive_bayes_proba(const LeafStats& stats, const Vector& x);

 private:
  HTNode& route_to_leaf(const Vector& x) const;
  Vector leaf_proba(const HTNode& leaf, const Vector& x) const;
  bool attempt_split(HTNode& leaf);

  HoeffdingTreeConfig config_;
  std::unique_ptr<HTNode> root_;
  long internal_count_ = 0;
};

}  // namespace sohot
