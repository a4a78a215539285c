#pragma once

#include "sohot/models.hpp"
#include "sohot/rng.hpp"
#include "sohot/streams.hpp"
#include "sohot/types.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

namespace sohot {

struct PrequentialConfig {
  long n_instances = 100000;
  long window = 1000;
  int repetitions = 1;
  unsigned long base_seed = 1;
  bool track_transparency = true;
  int threads = 0;  // 0: one worker per repetition up to hardware concurrency
};

struct WindowPoint {
  long instances = 0;
  double ce = 0.0;
  double node_count = 0.0;
  double grad_norm = 0.0;
  std::optional<double> transparency;
};

struct RepetitionResult {
  std::vector<WindowPoint> windows;
  double mean_ce = 0.0;
  double mean_grad_norm = 0.0;
  double final_window_ce = 0.0;
  long final_node_count = 0;
  std::optional<double> auroc;
  std::optional<double> transparency_ratio;  // pair-weighted over the stream
  long instances_seen = 0;
  bool truncated = false;
};

struct EvalReport {
  std::vector<RepetitionResult> reps;
  std::vector<WindowPoint> windows;  // element-wise mean across repetitions
  long n_instances = 0;
  double ce_mean = 0.0;
  double ce_se = 0.0;
  std::optional<double> auroc_mean;
  std::optional<double> auroc_se;
  std::optional<double> transparency_mean;
  double grad_norm_mean = 0.0;
  double node_count_mean = 0.0;
  bool truncated = false;
};

/// Sample mean and standard error (sample stddev / sqrt(n); 0 for n < 2).
std::pair<double, double> mean_and_stderr(const std::vector<double>& values);

/// Streaming rank-based AUROC with tie correction; multiclass streams use an
/// unweighted one-vs-rest macro average over the classes actually observed.
/// Bounded memory via reservoir sampling past one million pairs.
class AurocAccumulator {
 public:
  explicit AurocAccumulator(int class_count, long cap = 1000000);
  void add(const Vector& proba, int label);
  std::optional<double> value() const;
  long pair_count() const { return static_cast<long>(pairs_.size()); }

 private:
  int k_;
  long cap_;
  long seen_ = 0;
  std::vector<std::pair<Vector, int>> pairs_;
  Rng reservoir_rng_{0x5eedu};
};

using ModelFactory = std::function<std::unique_ptr<StreamModel>(unsigned long seed)>;
using StreamFactory = std::function<std::unique_ptr<SampleStream>(unsigned long seed)>;
using RepetitionHook = std::function<void(int rep, StreamModel& model)>;

/// Test-then-train evaluation: every instance is predicted and scored before
/// the model sees its label. Repetition r runs with seed base_seed + r; the
/// hook (if any) fires with the finished model, serialized across workers.
EvalReport prequential_run(const ModelFactory& make_model, const StreamFactory& make_stream,
                           const PrequentialConfig& config,
                           const RepetitionHook& on_rep_done = nullptr);

/// Exponentially decayed loss estimate; unset until the first observation,
/// which it adopts as-is.
struct DecayedMean {
  double decay = 0.99;
  std::optional<double> value;
  void add(double loss) { value = value ? decay * *value + (1.0 - decay) * loss : loss; }
};

/// Hyperparameter-tuning pool: the member with the lowest decayed loss
/// estimate serves every prediction, and the better-scoring half of the pool
/// trains on each instance.
class ModelPool final : public StreamModel {
 public:
  explicit ModelPool(std::vector<std::unique_ptr<StreamModel>> members, double decay = 0.99);

  Prediction predict(const Vector& x, bool with_transparency) override;
  double learn_one(const Vector& x, int y) override;
  ModelDiagnostics diagnostics() const override;
  int class_count() const override { return members_.front()->class_count(); }
  void dump(std::ostream& os) const override;

  int member_count() const { return static_cast<int>(members_.size()); }
  int serving_member() const;  // argmin of the current estimates
  const std::vector<int>& last_trained() const { return last_trained_; }
  const std::vector<DecayedMean>& estimates() const { return estimates_; }
  StreamModel& member(int i) { return *members_[i]; }

 private:
  std::vector<std::unique_ptr<StreamModel>> members_;
  std::vector<DecayedMean> estimates_;
  std::vector<int> last_trained_;
};

/// The pool's atomic test-then-train step: serve the best member's
/// prediction, then update estimates and train half the pool.
Vector pool_predict_train(ModelPool& pool, const Vector& x, int y);

/// Mean ratio of important features to p over all (instance, visited rule)
/// pairs of a test-then-train pass; absent when no rule was ever visited.
std::optional<double> transparency_series(StreamModel& model, SampleStream& stream, long n);

}  // namespace sohot
