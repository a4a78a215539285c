#pragma once

#include "sohot/hoeffding_tree.hpp"
#include "sohot/normalizer.hpp"
#include "sohot/soft_hoeffding_tree.hpp"
#include "sohot/soft_tree.hpp"
#include "sohot/types.hpp"

#include <iosfwd>
#include <memory>
#include <optional>

namespace sohot {

struct ModelDiagnostics {
  long node_count = 1;
  long leaf_count = 1;
  int depth = 0;
  double grad_norm = 0.0;
};

/// Per-prediction transparency aggregate: the sum over visited decision rules
/// of (important-feature count / p), plus the number of rules visited.
struct TransparencyStat {
  double ratio_sum = 0.0;
  long rule_count = 0;
};

struct Prediction {
  Vector proba;
  std::optional<TransparencyStat> transparency;
};

/// Uniform test-then-train surface over the learners.
class StreamModel {
 public:
  virtual ~StreamModel() = default;
  virtual Prediction predict(const Vector& x, bool with_transparency) = 0;
  Vector predict_proba(const Vector& x) { return predict(x, false).proba; }
  /// One training update; returns the model's own pre-update loss.
  virtual double learn_one(const Vector& x, int y) = 0;
  virtual ModelDiagnostics diagnostics() const = 0;
  virtual int class_count() const = 0;
  virtual void dump(std::ostream& os) const = 0;
};

/// Soft Hoeffding tree preceded by a streaming normalization layer.
class SoHoTModel final : public StreamModel {
 public:
  explicit SoHoTModel(const SoHoTConfig& config, bool normalize_inputs = true);

  Prediction predict(const Vector& x, bool with_transparency) override;
  double learn_one(const Vector& x, int y) override;
  ModelDiagnostics diagnostics() const override;
  int class_count() const override { return tree_.config().class_count; }
  void dump(std::ostream& os) const override;

  SoHoTree& tree() { return tree_; }
  const SoHoTree& tree() const { return tree_; }

 private:
  SoHoTree tree_;
  RunningNormalizer normalizer_;
  bool normalize_inputs_;
};

/// Fixed-topology soft tree preceded by the same normalization layer.
class SoftTreeModel final : public StreamModel {
 public:
  explicit SoftTreeModel(const SoftTreeConfig& config, bool normalize_inputs = true);

  Prediction predict(const Vector& x, bool with_transparency) override;
  double learn_one(const Vector& x, int y) override;
  ModelDiagnostics diagnostics() const override;
  int class_count() const override { return tree_.config().class_count; }
  void dump(std::ostream& os) const override;

  SoftTree& tree() { return tree_; }

 private:
  SoftTree tree_;
  RunningNormalizer normalizer_;
  bool normalize_inputs_;
};

/// Hoeffding tree baseline; hard routing needs no normalization and carries
/// no gradient, so grad_norm stays 0 and transparency is absent.
class HoeffdingTreeModel final : public StreamModel {
 public:
  explicit HoeffdingTreeModel(const HoeffdingTreeConfig& config);

  Prediction predict(const Vector& x, bool with_transparency) override;
  double learn_one(const Vector& x, int y) override;
  ModelDiagnostics diagnostics() const override;
  int class_count() const override { return tree_.config().class_count; }
  void dump(std::ostream& os) const override;

  HoeffdingTree& tree() { return tree_; }

 private:
  HoeffdingTree tree_;
};

}  // namespace sohot
