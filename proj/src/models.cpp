#include "sohot/models.hpp"

#include "sohot/losses.hpp"

#include <ostream>

namespace sohot {

SoHoTModel::SoHoTModel(const SoHoTConfig& config, bool normalize_inputs)
    : tree_(config),
      normalizer_(config.input_dim),
      normalize_inputs_(normalize_inputs) {}

Prediction SoHoTModel::predict(const Vector& x, bool with_transparency) {
  const Vector xn = normalize_inputs_ ? normalizer_.normalize(x, false) : x;
  ForwardResult fw = tree_.forward(xn);
  Prediction pred;
  pred.proba = softmax(fw.logits);
  if (with_transparency && !fw.trace.internals.empty()) {
    TransparencyStat stat;
    const double p = static_cast<double>(tree_.config().input_dim);
    for (const auto& e : fw.trace.internals) {
      if (e.reach <= 0.0) continue;
      stat.ratio_sum +=
          transparency_count(e.node->gate_weight, xn, tree_.config().alpha) / p;
      stat.rule_count += 1;
    }
    if (stat.rule_count > 0) pred.transparency = stat;
  }
  return pred;
}

double SoHoTModel::learn_one(const Vector& x, int y) {
  const Vector xn = normalize_inputs_ ? normalizer_.normalize(x, true) : x;
  return tree_.train_step(xn, y);
}

ModelDiagnostics SoHoTModel::diagnostics() const {
  const TreeDiagnostics d = tree_.diagnostics();
  return {d.node_count, d.leaf_count, d.depth, d.last_grad_output_norm};
}

void SoHoTModel::dump(std::ostream& os) const { tree_.dump(os); }

SoftTreeModel::SoftTreeModel(const SoftTreeConfig& config, bool normalize_inputs)
    : tree_(config),
      normalizer_(config.input_dim),
      normalize_inputs_(normalize_inputs) {}

Prediction SoftTreeModel::predict(const Vector& x, bool with_transparency) {
  const Vector xn = normalize_inputs_ ? normalizer_.normalize(x, false) : x;
  SoftTreeForwardResult fw = tree_.forward(xn);
  Prediction pred;
  pred.proba = softmax(fw.logits);
  if (with_transparency && !fw.trace.internals.empty()) {
    TransparencyStat stat;
    const double p = static_cast<double>(tree_.config().input_dim);
    for (const auto& e : fw.trace.internals) {
      if (e.reach <= 0.0) continue;
      stat.ratio_sum += transparency_count(tree_.gate_weight(e.index), xn, 1.0) / p;
      stat.rule_count += 1;
    }
    if (stat.rule_count > 0) pred.transparency = stat;
  }
  return pred;
}

double SoftTreeModel::learn_one(const Vector& x, int y) {
  const Vector xn = normalize_inputs_ ? normalizer_.normalize(x, true) : x;
  return tree_.train_step(xn, y);
}

ModelDiagnostics SoftTreeModel::diagnostics() const {
  const SoftTreeDiagnostics d = tree_.diagnostics();
  return {d.node_count, d.leaf_count, d.depth, d.last_grad_output_norm};
}

void SoftTreeModel::dump(std::ostream& os) const { tree_.dump(os); }

HoeffdingTreeModel::HoeffdingTreeModel(const HoeffdingTreeConfig& config) : tree_(config) {}

Prediction HoeffdingTreeModel::predict(const Vector& x, bool) {
  Prediction pred;
  pred.proba = tree_.predict_proba(x);
  return pred;
}

double HoeffdingTreeModel::learn_one(const Vector& x, int y) { return tree_.learn_one(x, y); }

ModelDiagnostics HoeffdingTreeModel::diagnostics() const {
  const HTDiagnostics d = tree_.diagnostics();
  return {d.node_count, d.leaf_count, d.depth, 0.0};
}

void HoeffdingTreeModel::dump(std::ostream& os) const { tree_.dump(os); }

}  // namespace sohot
