#pragma once

#include "sohot/adam.hpp"
#include "sohot/losses.hpp"
#include "sohot/smooth_step.hpp"
#include "sohot/split_finder.hpp"
#include "sohot/types.hpp"

#include <iosfwd>
#include <memory>
#include <vector>

namespace sohot {

/// p_left * a_left + (1 - p_left) * a_right, with the saturated cases passed
/// through untouched so skipped subtrees cannot perturb the result.
inline Vector combine_subtree_outputs(double p_left, const Vector& a_left,
                                      const Vector& a_right) {
  if (p_left == 0.0) return a_right;
  if (p_left == 1.0) return a_left;
  return p_left * a_left + (1.0 - p_left) * a_right;
}

/// Number of features with more-than-average influence on the decision rule
/// S(<w, x>), with the gate share damped by alpha and the univariate split
/// test contributing one feature whenever its weight 1 - alpha clears the
/// uniform share 1/p. Call with alpha = 1 for a plain soft tree rule.
int transparency_count(const Vector& node_weight, const Vector& x, double alpha);

struct SoHoTConfig {
  int input_dim = 0;
  int class_count = 0;
  double alpha = 0.3;
  SmoothStepParams gate{1.0};
  int max_depth = 7;
  double delta = 1e-7;
  double tau = 0.05;
  double epsilon_s = 0.25;
  long grace_period = 200;
  double learning_rate = 1e-2;
};

/// Tree node. A node is a leaf while it has no children; a split turns it
/// into an internal node in place (fresh id, gate weight and split test) and
/// hands its output weight to two new child leaves.
struct SoHoTNode {
  int id = 0;
  int depth = 0;
  // leaf payload
  Vector output_weight;
  LeafStats stats;
  AdamState output_opt;
  // internal payload
  Vector gate_weight;
  SplitTest split;
  AdamState gate_opt;
  std::unique_ptr<SoHoTNode> left;
  std::unique_ptr<SoHoTNode> right;

  bool is_leaf() const { return left == nullptr; }
};

/// Per-instance record of everything the backward pass needs: reach
/// probabilities, gate pre-activations, routing probabilities and subtree
/// outputs for every visited node.
struct TraversalTrace {
  struct Internal {
    SoHoTNode* node;
    double reach;       // mu(i)
    double preact;      // <w_i, x>
    double p_left;      // routing probability toward the left child
    Vector a_left;      // subtree output of the left child
    Vector a_right;
  };
  struct Leaf {
    SoHoTNode* node;
    double reach;  // mu(l)
  };
  std::vector<Internal> internals;  // post-order
  std::vector<Leaf> leaves;
  Vector input;
  unsigned long revision = 0;
};

struct ForwardResult {
  Vector logits;
  TraversalTrace trace;
};

/// Gradients of the loss w.r.t. the input and every visited weight.
/// Nodes with zero reach probability or a saturated gate carry no entry.
struct SoHoTGradients {
  Vector input;
  std::vector<std::pair<SoHoTNode*, Vector>> gate_weights;    // dL/dw_i
  std::vector<std::pair<SoHoTNode*, Vector>> output_weights;  // dL/do_l
};

struct TreeDiagnostics {
  long node_count = 1;
  long leaf_count = 1;
  int depth = 0;
  double last_grad_output_norm = 0.0;
};

/// Routing probability of an internal node:
///   alpha * S(<w, x>) + (1 - alpha) * 1(x[feature] < threshold).
double routing_probability(const Vector& gate_weight, const SplitTest& split, const Vector& x,
                           double alpha, const SmoothStepParams& gate);
double routing_probability(const SoHoTNode& node, const Vector& x, double alpha,
                           const SmoothStepParams& gate);

/// Incrementally grown differentiable decision tree: soft gate routing blended
/// with univariate split tests, grown by Hoeffding-bound split decisions and
/// trained per instance with Adam.
class SoHoTree {
 public:
  explicit SoHoTree(const SoHoTConfig& config);

  /// Computes logits = sum over leaves of mu(l) * o_l via the subtree
  /// recurrence, visiting zero-probability subtrees only when prune is false.
  ForwardResult forward(const Vector& x, bool prune = true) const;

  /// Gradients from a recorded trace. The univariate indicator term is
  /// piecewise constant and contributes nothing.
  SoHoTGradients backward(const Vector& x, const TraversalTrace& trace,
                          const Vector& grad_output) const;

  /// Adds one observation to the leaf's split statistics iff the leaf is
  /// within depth bounds and the instance reaches it with more than
  /// epsilon_s probability. Returns whether statistics were updated.
  static bool update_leaf_statistics(SoHoTNode& leaf, const Vector& x, int y, double reach_prob,
                                     double epsilon_s, int max_depth);

  /// The Hoeffding split attempt on one leaf: evaluates candidate gains and
  /// splits when the bound (or the tie-break threshold) allows it. Resets
  /// the leaf's attempt counter. Returns whether a split was performed.
  bool attempt_split(SoHoTNode& leaf);

  /// Turns a leaf into an internal node with the given test. Both children
  /// copy the parent's output weight and the gate weight starts at zero, so
  /// the tree's output function is unchanged at the instant of the split.
  void split_leaf(SoHoTNode& leaf, const SplitTest& test);

  /// One test-then-train update: forward, cross-entropy, backward, leaf
  /// statistics, split attempts, then Adam on every weight with a nonzero
  /// gradient. Returns the pre-update loss.
  double train_step(const Vector& x, int y);

  TreeDiagnostics diagnostics() const;

  /// Text dump, one node per line, two-space indentation per depth level.
  void dump(std::ostream& os) const;

  const SoHoTConfig& config() const { return config_; }
  SoHoTNode& root() { return *root_; }
  const SoHoTNode& root() const { return *root_; }
  unsigned long revision() const { return revision_; }
  double last_grad_output_norm() const { return last_grad_output_norm_; }

 private:
  Vector forward_node(SoHoTNode* node, double reach, const Vector& x, bool prune,
                      TraversalTrace& trace) const;
  std::unique_ptr<SoHoTNode> make_leaf(int depth, const Vector& output_weight);

  SoHoTConfig config_;
  std::unique_ptr<SoHoTNode> root_;
  unsigned long revision_ = 0;
  int next_id_ = 0;
  double last_grad_output_norm_ = 0.0;
};

}  // namespace sohot
