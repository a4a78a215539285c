#include "sohot/soft_tree.hpp"

#include "sohot/dump_format.hpp"
#include "sohot/losses.hpp"
#include "sohot/rng.hpp"
#include "sohot/soft_hoeffding_tree.hpp"

#include <cmath>
#include <ostream>

namespace sohot {

SoftTree::SoftTree(const SoftTreeConfig& config) : config_(config) {
  detail::require(config.input_dim >= 1, "SoftTree: input_dim must be >= 1");
  detail::require(config.class_count >= 2, "SoftTree: class_count must be >= 2");
  detail::require(config.depth >= 1, "SoftTree: depth must be >= 1");
  detail::require(config.gate.gamma > 0.0, "SoftTree: gamma must be positive");
  const int n_internal = (1 << config.depth) - 1;
  const int n_leaves = 1 << config.depth;
  Rng rng(config.seed);
  const double scale = config.init_scale / std::sqrt(static_cast<double>(config.input_dim));
  gate_weights_.reserve(n_internal);
  gate_opts_.reserve(n_internal);
  for (int i = 0; i < n_internal; ++i) {
    Vector w(config.input_dim);
    for (int j = 0; j < config.input_dim; ++j) w[j] = scale * rng.gaussian();
    gate_weights_.push_back(std::move(w));
    gate_opts_.emplace_back(config.input_dim, config.learning_rate);
  }
  leaf_weights_.assign(n_leaves, Vector::Zero(config.class_count));
  leaf_opts_.assign(n_leaves, AdamState(config.class_count, config.learning_rate));
}

int SoftTree::node_depth(int internal_index) const {
  int depth = 0;
  for (int i = internal_index + 1; i > 1; i >>= 1) ++depth;
  return depth;
}

SoftTreeForwardResult SoftTree::forward(const Vector& x, bool prune) const {
  detail::require(x.size() == config_.input_dim, "SoftTree::forward: input length mismatch");
  SoftTreeForwardResult result;
  result.logits = forward_node(0, 1.0, x, prune, result.trace);
  return result;
}

Vector SoftTree::forward_node(int index, double reach, const Vector& x, bool prune,
                              SoftTreeTrace& trace) const {
  if (index >= internal_count()) {
    const int leaf = index - internal_count();
    trace.leaves.push_back({leaf, reach});
    return leaf_weights_[leaf];
  }
  const double preact = gate_weights_[index].dot(x);
  const double p_left = smooth_step(preact, config_.gate);

  Vector a_left = Vector::Zero(config_.class_count);
  Vector a_right = Vector::Zero(config_.class_count);
  if (p_left > 0.0 || !prune) {
    a_left = forward_node(2 * index + 1, reach * p_left, x, prune, trace);
  }
  if (p_left < 1.0 || !prune) {
    a_right = forward_node(2 * index + 2, reach * (1.0 - p_left), x, prune, trace);
  }
  trace.internals.push_back({index, reach, preact, p_left, a_left, a_right});
  return combine_subtree_outputs(p_left, a_left, a_right);
}

SoftTreeGradients SoftTree::backward(const Vector& x, const SoftTreeTrace& trace,
                                     const Vector& grad_output) const {
  detail::require(grad_output.size() == config_.class_count,
                  "SoftTree::backward: grad_output length mismatch");
  SoftTreeGradients grads;
  grads.input = Vector::Zero(config_.input_dim);
  for (const auto& leaf : trace.leaves) {
    if (leaf.reach == 0.0) continue;
    grads.output_weights.emplace_back(leaf.index, leaf.reach * grad_output);
  }
  for (const auto& e : trace.internals) {
    if (e.reach == 0.0) continue;
    const double slope = smooth_step_derivative(e.preact, config_.gate);
    if (slope == 0.0) continue;
    const double d = grad_output.dot(e.a_left - e.a_right);
    const double scale = e.reach * d * slope;
    grads.gate_weights.emplace_back(e.index, scale * x);
    grads.input += scale * gate_weights_[e.index];
  }
  return grads;
}

double SoftTree::train_step(const Vector& x, int y) {
  detail::require(y >= 0 && y < config_.class_count, "SoftTree::train_step: label out of range");
  SoftTreeForwardResult fw = forward(x);
  CrossEntropyResult ce = softmax_cross_entropy(fw.logits, y);
  last_grad_output_norm_ = ce.grad_logits.norm();
  SoftTreeGradients grads = backward(x, fw.trace, ce.grad_logits);
  for (auto& [index, grad] : grads.gate_weights) {
    if (!grad.isZero(0.0)) adam_update(gate_opts_[index], gate_weights_[index], grad);
  }
  for (auto& [index, grad] : grads.output_weights) {
    if (!grad.isZero(0.0)) adam_update(leaf_opts_[index], leaf_weights_[index], grad);
  }
  return ce.loss;
}

SoftTreeDiagnostics SoftTree::diagnostics() const {
  SoftTreeDiagnostics diag;
  diag.leaf_count = leaf_count();
  diag.node_count = internal_count() + leaf_count();
  diag.depth = config_.depth;
  diag.last_grad_output_norm = last_grad_output_norm_;
  return diag;
}

namespace {

void dump_node(std::ostream& os, const SoftTree& tree, int index, int depth) {
  if (index >= tree.internal_count()) {
    const int leaf = index - tree.internal_count();
    dump_leaf_line(os, depth, softmax(tree.leaf_weight(leaf)), 0);
    return;
  }
  // Fixed topology carries no split test; feature is dumped as -1.
  dump_internal_line(os, depth, -1, 0.0, tree.gate_weight(index).norm());
  dump_node(os, tree, 2 * index + 1, depth + 1);
  dump_node(os, tree, 2 * index + 2, depth + 1);
}

}  // namespace

void SoftTree::dump(std::ostream& os) const { dump_node(os, *this, 0, 0); }

}  // namespace sohot
