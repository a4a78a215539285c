#include "sohot/soft_hoeffding_tree.hpp"

#include "sohot/dump_format.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace sohot {

int transparency_count(const Vector& node_weight, const Vector& x, double alpha) {
  detail::require(node_weight.size() == x.size() && node_weight.size() >= 1,
                  "transparency_count: length mismatch");
  const Eigen::Index p = node_weight.size();
  double sigma = 0.0;
  for (Eigen::Index i = 0; i < p; ++i) sigma += std::abs(node_weight[i] * x[i]);
  const double uniform_share = 1.0 / static_cast<double>(p);
  int count = 0;
  if (sigma > 0.0) {
    for (Eigen::Index i = 0; i < p; ++i) {
      if (alpha * std::abs(node_weight[i] * x[i]) / sigma >= uniform_share) ++count;
    }
  }
  if (1.0 - alpha >= uniform_share) ++count;
  return count;
}

double routing_probability(const Vector& gate_weight, const SplitTest& split, const Vector& x,
                           double alpha, const SmoothStepParams& gate) {
  detail::require(gate_weight.size() == x.size(), "routing_probability: length mismatch");
  detail::require(split.feature >= 0 && split.feature < x.size(),
                  "routing_probability: split feature out of range");
  const double s = smooth_step(gate_weight.dot(x), gate);
  const double indicator = x[split.feature] < split.threshold ? 1.0 : 0.0;
  return alpha * s + (1.0 - alpha) * indicator;
}

double routing_probability(const SoHoTNode& node, const Vector& x, double alpha,
                           const SmoothStepParams& gate) {
  return routing_probability(node.gate_weight, node.split, x, alpha, gate);
}

SoHoTree::SoHoTree(const SoHoTConfig& config) : config_(config) {
  detail::require(config.input_dim >= 1, "SoHoTree: input_dim must be >= 1");
  detail::require(config.class_count >= 2, "SoHoTree: class_count must be >= 2");
  detail::require(config.alpha >= 0.0 && config.alpha <= 1.0, "SoHoTree: alpha must be in [0,1]");
  detail::require(config.gate.gamma > 0.0, "SoHoTree: gamma must be positive");
  detail::require(config.max_depth >= 1, "SoHoTree: max_depth must be >= 1");
  detail::require(config.delta > 0.0 && config.delta < 1.0, "SoHoTree: delta must be in (0,1)");
  detail::require(config.epsilon_s > 0.0 && config.epsilon_s <= 1.0,
                  "SoHoTree: epsilon_s must be in (0,1]");
  detail::require(config.grace_period >= 1, "SoHoTree: grace_period must be >= 1");
  root_ = make_leaf(0, Vector::Zero(config.class_count));
}

std::unique_ptr<SoHoTNode> SoHoTree::make_leaf(int depth, const Vector& output_weight) {
  auto node = std::make_unique<SoHoTNode>();
  node->id = next_id_++;
  node->depth = depth;
  node->output_weight = output_weight;
  node->stats = LeafStats(config_.input_dim, config_.class_count);
  node->output_opt = AdamState(config_.class_count, config_.learning_rate);
  return node;
}

ForwardResult SoHoTree::forward(const Vector& x, bool prune) const {
  detail::require(x.size() == config_.input_dim, "SoHoTree::forward: input length mismatch");
  detail::require(x.allFinite(), "SoHoTree::forward: input must be finite");
  ForwardResult result;
  result.trace.input = x;
  result.trace.revision = revision_;
  result.logits = forward_node(root_.get(), 1.0, x, prune, result.trace);
  return result;
}

Vector SoHoTree::forward_node(SoHoTNode* node, double reach, const Vector& x, bool prune,
                              TraversalTrace& trace) const {
  if (node->is_leaf()) {
    trace.leaves.push_back({node, reach});
    return node->output_weight;
  }
  const double preact = node->gate_weight.dot(x);
  const double s = smooth_step(preact, config_.gate);
  const double indicator = x[node->split.feature] < node->split.threshold ? 1.0 : 0.0;
  const double p_left = config_.alpha * s + (1.0 - config_.alpha) * indicator;

  Vector a_left = Vector::Zero(config_.class_count);
  Vector a_right = Vector::Zero(config_.class_count);
  if (p_left > 0.0 || !prune) {
    a_left = forward_node(node->left.get(), reach * p_left, x, prune, trace);
  }
  if (p_left < 1.0 || !prune) {
    a_right = forward_node(node->right.get(), reach * (1.0 - p_left), x, prune, trace);
  }
  trace.internals.push_back({node, reach, preact, p_left, a_left, a_right});
  return combine_subtree_outputs(p_left, a_left, a_right);
}

SoHoTGradients SoHoTree::backward(const Vector& x, const TraversalTrace& trace,
                                  const Vector& grad_output) const {
  detail::require(trace.revision == revision_, "SoHoTree::backward: trace/tree mismatch");
  detail::require(trace.input.size() == x.size() && (trace.input.array() == x.array()).all(),
                  "SoHoTree::backward: trace was produced for a different input");
  detail::require(grad_output.size() == config_.class_count,
                  "SoHoTree::backward: grad_output length mismatch");

  SoHoTGradients grads;
  grads.input = Vector::Zero(config_.input_dim);
  for (const auto& leaf : trace.leaves) {
    if (leaf.reach == 0.0) continue;
    grads.output_weights.emplace_back(leaf.node, leaf.reach * grad_output);
  }
  for (const auto& e : trace.internals) {
    if (e.reach == 0.0) continue;
    const double gate_slope = config_.alpha * smooth_step_derivative(e.preact, config_.gate);
    if (gate_slope == 0.0) continue;
    const double d = grad_output.dot(e.a_left - e.a_right);
    const double scale = e.reach * d * gate_slope;
    grads.gate_weights.emplace_back(e.node, scale * x);
    grads.input += scale * e.node->gate_weight;
  }
  return grads;
}

bool SoHoTree::update_leaf_statistics(SoHoTNode& leaf, const Vector& x, int y, double reach_prob,
                                      double epsilon_s, int max_depth) {
  detail::require(leaf.is_leaf(), "update_leaf_statistics: node is not a leaf");
  if (leaf.depth > max_depth || !(reach_prob > epsilon_s)) return false;
  leaf.stats.add(x, y);
  return true;
}

bool SoHoTree::attempt_split(SoHoTNode& leaf) {
  detail::require(leaf.is_leaf(), "attempt_split: node is not a leaf");
  leaf.stats.reset_split_attempt_counter();
  if (leaf.depth >= config_.max_depth) return false;
  const SplitDecision decision = decide_split(leaf.stats, config_.delta, config_.tau);
  if (!decision.should_split) return false;
  split_leaf(leaf, SplitTest{decision.best.feature, decision.best.threshold});
  return true;
}

void SoHoTree::split_leaf(SoHoTNode& leaf, const SplitTest& test) {
  detail::require(leaf.is_leaf(), "split_leaf: node is not a leaf");
  detail::require(test.feature >= 0 && test.feature < config_.input_dim,
                  "split_leaf: feature out of range");
  auto left = make_leaf(leaf.depth + 1, leaf.output_weight);
  auto right = make_leaf(leaf.depth + 1, leaf.output_weight);
  leaf.id = next_id_++;
  leaf.gate_weight = Vector::Zero(config_.input_dim);
  leaf.split = test;
  leaf.gate_opt = AdamState(config_.input_dim, config_.learning_rate);
  leaf.output_weight = Vector();
  leaf.output_opt = AdamState();
  leaf.stats = LeafStats();
  leaf.left = std::move(left);
  leaf.right = std::move(right);
  revision_ += 1;
}

double SoHoTree::train_step(const Vector& x, int y) {
  detail::require(y >= 0 && y < config_.class_count, "SoHoTree::train_step: label out of range");
  ForwardResult fw = forward(x);
  CrossEntropyResult ce = softmax_cross_entropy(fw.logits, y);
  last_grad_output_norm_ = ce.grad_logits.norm();
  SoHoTGradients grads = backward(x, fw.trace, ce.grad_logits);

  for (const auto& leaf : fw.trace.leaves) {
    update_leaf_statistics(*leaf.node, x, y, leaf.reach, config_.epsilon_s, config_.max_depth);
  }
  for (const auto& leaf : fw.trace.leaves) {
    if (leaf.node->is_leaf() &&
        leaf.node->stats.samples_since_last_attempt() >= config_.grace_period) {
      attempt_split(*leaf.node);
    }
  }
  for (auto& [node, grad] : grads.gate_weights) {
    if (!grad.isZero(0.0)) adam_update(node->gate_opt, node->gate_weight, grad);
  }
  for (auto& [node, grad] : grads.output_weights) {
    // A leaf split this step hands its weight to the children; its gradient dies with it.
    if (node->is_leaf() && !grad.isZero(0.0)) {
      adam_update(node->output_opt, node->output_weight, grad);
    }
  }
  return ce.loss;
}

namespace {

void collect_diagnostics(const SoHoTNode& node, TreeDiagnostics& diag) {
  if (node.is_leaf()) {
    diag.leaf_count += 1;
    diag.depth = std::max(diag.depth, node.depth);
    return;
  }
  collect_diagnostics(*node.left, diag);
  collect_diagnostics(*node.right, diag);
}

void dump_node(std::ostream& os, const SoHoTNode& node) {
  if (node.is_leaf()) {
    dump_leaf_line(os, node.depth, softmax(node.output_weight), node.stats.total_count());
    return;
  }
  dump_internal_line(os, node.depth, node.split.feature, node.split.threshold,
                     node.gate_weight.norm());
  dump_node(os, *node.left);
  dump_node(os, *node.right);
}

}  // namespace

TreeDiagnostics SoHoTree::diagnostics() const {
  TreeDiagnostics diag;
  diag.leaf_count = 0;
  collect_diagnostics(*root_, diag);
  diag.node_count = 2 * diag.leaf_count - 1;
  diag.last_grad_output_norm = last_grad_output_norm_;
  return diag;
}

void SoHoTree::dump(std::ostream& os) const { dump_node(os, *root_); }

}  // namespace sohot
