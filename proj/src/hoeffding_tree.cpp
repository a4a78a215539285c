#include "sohot/hoeffding_tree.hpp"

#include "sohot/dump_format.hpp"
#include "sohot/losses.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace sohot {

HoeffdingTree::HoeffdingTree(const HoeffdingTreeConfig& config) : config_(config) {
  detail::require(config.input_dim >= 1, "HoeffdingTree: input_dim must be >= 1");
  detail::require(config.class_count >= 2, "HoeffdingTree: class_count must be >= 2");
  detail::require(config.delta > 0.0 && config.delta < 1.0,
                  "HoeffdingTree: delta must be in (0,1)");
  detail::require(config.grace_period >= 1, "HoeffdingTree: grace_period must be >= 1");
  detail::require(!config.internal_node_limit || *config.internal_node_limit >= 1,
                  "HoeffdingTree: internal_node_limit must be >= 1");
  root_ = std::make_unique<HTNode>();
  root_->stats = LeafStats(config.input_dim, config.class_count);
}

HTNode& HoeffdingTree::route_to_leaf(const Vector& x) const {
  HTNode* node = root_.get();
  while (!node->is_leaf()) {
    node = x[node->split.feature] < node->split.threshold ? node->left.get() : node->right.get();
  }
  return *node;
}

Vector HoeffdingTree::majority_class_proba(const LeafStats& stats) {
  const int k = stats.n_classes();
  Vector proba(k);
  const double total = static_cast<double>(stats.total_count());
  for (int c = 0; c < k; ++c) {
    proba[c] = (static_cast<double>(stats.class_count(c)) + 1.0) / (total + k);
  }
  return proba;
}

Vector HoeffdingTree::naive_bayes_proba(const LeafStats& stats, const Vector& x) {
  const int k = stats.n_classes();
  const double total = static_cast<double>(stats.total_count());
  Vector log_score(k);
  for (int c = 0; c < k; ++c) {
    double s = std::log((static_cast<double>(stats.class_count(c)) + 1.0) / (total + k));
    if (stats.class_count(c) > 0) {
      for (int f = 0; f < stats.n_features(); ++f) {
        const GaussianObserver& obs = stats.observer(f, c);
        if (obs.count < 2) continue;
        const double var = std::max(obs.variance(), 1e-12);
        const double dx = x[f] - obs.mean;
        s += -0.5 * (std::log(2.0 * M_PI * var) + dx * dx / var);
      }
    }
    log_score[c] = s;
  }
  return softmax(log_score);
}

Vector HoeffdingTree::leaf_proba(const HTNode& leaf, const Vector& x) const {
  if (config_.leaf_prediction == LeafPrediction::NaiveBayesAdaptive &&
      leaf.nb_correct > leaf.mc_correct) {
    return naive_bayes_proba(leaf.stats, x);
  }
  return majority_class_proba(leaf.stats);
}

Vector HoeffdingTree::predict_proba(const Vector& x) const {
  detail::require(x.size() == config_.input_dim, "HoeffdingTree::predict_proba: length mismatch");
  return leaf_proba(route_to_leaf(x), x);
}

double HoeffdingTree::learn_one(const Vector& x, int y) {
  detail::require(x.size() == config_.input_dim, "HoeffdingTree::learn_one: length mismatch");
  detail::require(y >= 0 && y < config_.class_count,
                  "HoeffdingTree::learn_one: label out of range");
  HTNode& leaf = route_to_leaf(x);
  const double loss = cross_entropy_from_proba(leaf_proba(leaf, x), y);
  if (config_.leaf_prediction == LeafPrediction::NaiveBayesAdaptive) {
    int mc_pred = 0;
    majority_class_proba(leaf.stats).maxCoeff(&mc_pred);
    int nb_pred = 0;
    naive_bayes_proba(leaf.stats, x).maxCoeff(&nb_pred);
    if (mc_pred == y) leaf.mc_correct += 1;
    if (nb_pred == y) leaf.nb_correct += 1;
  }
  leaf.stats.add(x, y);
  if (leaf.stats.samples_since_last_attempt() >= config_.grace_period) attempt_split(leaf);
  return loss;
}

bool HoeffdingTree::attempt_split(HTNode& leaf) {
  leaf.stats.reset_split_attempt_counter();
  if (config_.internal_node_limit && internal_count_ >= *config_.internal_node_limit) {
    return false;
  }
  const SplitDecision decision = decide_split(leaf.stats, config_.delta, config_.tau);
  if (!decision.should_split) return false;
  leaf.split = SplitTest{decision.best.feature, decision.best.threshold};
  leaf.left = std::make_unique<HTNode>();
  leaf.right = std::make_unique<HTNode>();
  for (HTNode* child : {leaf.left.get(), leaf.right.get()}) {
    child->depth = leaf.depth + 1;
    child->stats = LeafStats(config_.input_dim, config_.class_count);
  }
  leaf.stats = LeafStats();
  leaf.nb_correct = 0;
  leaf.mc_correct = 0;
  internal_count_ += 1;
  return true;
}

namespace {

void collect_diagnostics(const HTNode& node, HTDiagnostics& diag) {
  if (node.is_leaf()) {
    diag.leaf_count += 1;
    diag.depth = std::max(diag.depth, node.depth);
    return;
  }
  collect_diagnostics(*node.left, diag);
  collect_diagnostics(*node.right, diag);
}

void dump_node(std::ostream& os, const HTNode& node) {
  if (node.is_leaf()) {
    dump_leaf_line(os, node.depth, HoeffdingTree::majority_class_proba(node.stats),
                   node.stats.total_count());
    return;
  }
  dump_internal_line(os, node.depth, node.split.feature, node.split.threshold, 0.0);
  dump_node(os, *node.left);
  dump_node(os, *node.right);
}

}  // namespace

HTDiagnostics HoeffdingTree::diagnostics() const {
  HTDiagnostics diag;
  diag.leaf_count = 0;
  collect_diagnostics(*root_, diag);
  diag.node_count = 2 * diag.leaf_count - 1;
  return diag;
}

void HoeffdingTree::dump(std::ostream& os) const { dump_node(os, *root_); }

}  // namespace sohot
