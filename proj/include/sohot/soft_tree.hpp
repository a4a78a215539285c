#pragma once

#include "sohot/adam.hpp"
#include "sohot/smooth_step.hpp"
#include "sohot/types.hpp"

#include <iosfwd>
#include <vector>

namespace sohot {

struct SoftTreeConfig {
  int input_dim = 0;
  int class_count = 0;
  int depth = 7;
  SmoothStepParams gate{1.0};
  double learning_rate = 1e-2;
  unsigned long seed = 1;
  double init_scale = 0.3;  // stddev of <w, x> under unit-variance inputs
};

/// Per-instance forward record for the fixed-topology soft tree; mirrors the
/// growing tree's trace but indexes nodes by heap position.
struct SoftTreeTrace {
  struct Internal {
    int index;
    double reach;
    double preact;
    double p_left;
    Vector a_left;
    Vector a_right;
  };
  struct Leaf {
    int index;
    double reach;
  };
  std::vector<Internal> internals;
  std::vector<Leaf> leaves;
};

struct SoftTreeForwardResult {
  Vector logits;
  SoftTreeTrace trace;
};

struct SoftTreeGradients {
  Vector input;
  std::vector<std::pair<int, Vector>> gate_weights;    // internal index -> dL/dw
  std::vector<std::pair<int, Vector>> output_weights;  // leaf index -> dL/do
};

struct SoftTreeDiagnostics {
  long node_count = 0;
  long leaf_count = 0;
  int depth = 0;
  double last_grad_output_norm = 0.0;
};

/// Complete binary soft tree of fixed depth, routed purely by the smooth-step
/// gate S(<w, x>) with the same conditional computation and gradient formulas
/// as the growing tree at alpha = 1. Internal nodes are heap-indexed: node i
/// has children 2i+1 and 2i+2; indices past the internal count map to leaves.
class SoftTree {
 public:
  explicit SoftTree(const SoftTreeConfig& config);

  SoftTreeForwardResult forward(const Vector& x, bool prune = true) const;
  SoftTreeGradients backward(const Vector& x, const SoftTreeTrace& trace,
                             const Vector& grad_output) const;
  double train_step(const Vector& x, int y);

  SoftTreeDiagnostics diagnostics() const;
  void dump(std::ostream& os) const;

  int internal_count() const { return static_cast<int>(gate_weights_.size()); }
  int leaf_count() const { return static_cast<int>(leaf_weights_.size()); }
  int node_depth(int internal_index) const;

  Vector& gate_weight(int i) { return gate_weights_[i]; }
  const Vector& gate_weight(int i) const { return gate_weights_[i]; }
  Vector& leaf_weight(int i) { return leaf_weights_[i]; }
  const Vector& leaf_weight(int i) const { return leaf_weights_[i]; }

  const SoftTreeConfig& config() const { return config_; }
  double last_grad_output_norm() const { return last_grad_output_norm_; }

 private:
  Vector forward_node(int index, double reach, const Vector& x, bool prune,
                      SoftTreeTrace& trace) const;

  SoftTreeConfig config_;
  std::vector<Vector> gate_weights_;
  std::vector<Vector> leaf_weights_;
  std::vector<AdamState> gate_opts_;
  std::vector<AdamState> leaf_opts_;
  double last_grad_output_norm_ = 0.0;
};

}  // namespace sohot
