#include "sohot/eval.hpp"

#include "sohot/losses.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

namespace sohot {

std::pair<double, double> mean_and_stderr(const std::vector<double>& values) {
  const std::size_t n = values.size();
  if (n == 0) return {0.0, 0.0};
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (n < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double stddev = std::sqrt(ss / static_cast<double>(n - 1));
  return {mean, stddev / std::sqrt(static_cast<double>(n))};
}

AurocAccumulator::AurocAccumulator(int class_count, long cap) : k_(class_count), cap_(cap) {
  detail::require(class_count >= 2, "AurocAccumulator: class_count must be >= 2");
}

void AurocAccumulator::add(const Vector& proba, int label) {
  detail::require(proba.size() == k_, "AurocAccumulator: probability length mismatch");
  seen_ += 1;
  if (static_cast<long>(pairs_.size()) < cap_) {
    pairs_.emplace_back(proba, label);
    return;
  }
  const long slot = reservoir_rng_.uniform_int(seen_);
  if (slot < cap_) pairs_[slot] = {proba, label};
}

namespace {

// Mann-Whitney AUROC with average ranks for ties.
std::optional<double> ranked_auroc(std::vector<std::pair<double, bool>>& scored) {
  long n_pos = 0;
  for (const auto& [score, positive] : scored) n_pos += positive ? 1 : 0;
  const long n_neg = static_cast<long>(scored.size()) - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;
  std::sort(scored.begin(), scored.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < scored.size()) {
    std::size_t j = i;
    while (j < scored.size() && scored[j].first == scored[i].first) ++j;
    const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    for (std::size_t t = i; t < j; ++t) {
      if (scored[t].second) rank_sum_pos += avg_rank;
    }
    i = j;
  }
  const double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) * (n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

}  // namespace

std::optional<double> AurocAccumulator::value() const {
  if (pairs_.empty()) return std::nullopt;
  std::vector<bool> present(k_, false);
  for (const auto& [proba, label] : pairs_) present[label] = true;
  const int n_present = static_cast<int>(std::count(present.begin(), present.end(), true));
  if (n_present < 2) return std::nullopt;

  if (k_ == 2) {
    std::vector<std::pair<double, bool>> scored;
    scored.reserve(pairs_.size());
    for (const auto& [proba, label] : pairs_) scored.emplace_back(proba[1], label == 1);
    return ranked_auroc(scored);
  }

  double sum = 0.0;
  int counted = 0;
  for (int c = 0; c < k_; ++c) {
    if (!present[c]) continue;
    std::vector<std::pair<double, bool>> scored;
    scored.reserve(pairs_.size());
    for (const auto& [proba, label] : pairs_) scored.emplace_back(proba[c], label == c);
    if (auto v = ranked_auroc(scored)) {
      sum += *v;
      counted += 1;
    }
  }
  if (counted == 0) return std::nullopt;
  return sum / counted;
}

namespace {

RepetitionResult run_single_repetition(StreamModel& model, SampleStream& stream,
                                       const PrequentialConfig& config) {
  RepetitionResult rep;
  AurocAccumulator auroc(model.class_count());
  double ce_total = 0.0, grad_total = 0.0;
  double window_ce = 0.0, window_grad = 0.0;
  double window_transp_sum = 0.0;
  long window_transp_rules = 0;
  double transp_sum = 0.0;
  long transp_rules = 0;
  long in_window = 0;

  Sample sample;
  for (long i = 0; i < config.n_instances; ++i) {
    if (!stream.next(sample)) {
      rep.truncated = true;
      break;
    }
    Prediction pred = model.predict(sample.features, config.track_transparency);
    const double ce = cross_entropy_from_proba(pred.proba, sample.label);
    auroc.add(pred.proba, sample.label);
    if (pred.transparency) {
      window_transp_sum += pred.transparency->ratio_sum;
      window_transp_rules += pred.transparency->rule_count;
      transp_sum += pred.transparency->ratio_sum;
      transp_rules += pred.transparency->rule_count;
    }

    model.learn_one(sample.features, sample.label);

    const double grad_norm = model.diagnostics().grad_norm;
    ce_total += ce;
    grad_total += grad_norm;
    window_ce += ce;
    window_grad += grad_norm;
    in_window += 1;
    rep.instances_seen += 1;

    if (in_window == config.window || i + 1 == config.n_instances) {
      WindowPoint point;
      point.instances = rep.instances_seen;
      point.ce = window_ce / in_window;
      point.grad_norm = window_grad / in_window;
      point.node_count = static_cast<double>(model.diagnostics().node_count);
      if (window_transp_rules > 0) point.transparency = window_transp_sum / window_transp_rules;
      rep.windows.push_back(point);
      window_ce = window_grad = window_transp_sum = 0.0;
      window_transp_rules = 0;
      in_window = 0;
    }
  }
  if (in_window > 0) {  // trailing partial window after truncation
    WindowPoint point;
    point.instances = rep.instances_seen;
    point.ce = window_ce / in_window;
    point.grad_norm = window_grad / in_window;
    point.node_count = static_cast<double>(model.diagnostics().node_count);
    if (window_transp_rules > 0) point.transparency = window_transp_sum / window_transp_rules;
    rep.windows.push_back(point);
  }
  if (rep.instances_seen > 0) {
    rep.mean_ce = ce_total / rep.instances_seen;
    rep.mean_grad_norm = grad_total / rep.instances_seen;
  }
  rep.final_window_ce = rep.windows.empty() ? 0.0 : rep.windows.back().ce;
  rep.final_node_count = model.diagnostics().node_count;
  rep.auroc = auroc.value();
  if (transp_rules > 0) rep.transparency_ratio = transp_sum / transp_rules;
  return rep;
}

}  // namespace

EvalReport prequential_run(const ModelFactory& make_model, const StreamFactory& make_stream,
                           const PrequentialConfig& config, const RepetitionHook& on_rep_done) {
  detail::require(config.window >= 1, "prequential_run: window must be >= 1");
  detail::require(config.repetitions >= 1, "prequential_run: repetitions must be >= 1");

  EvalReport report;
  report.reps.resize(config.repetitions);

  std::mutex hook_mutex;
  auto run_rep = [&](int r) {
    const unsigned long seed = config.base_seed + static_cast<unsigned long>(r);
    auto model = make_model(seed);
    auto stream = make_stream(seed);
    report.reps[r] = run_single_repetition(*model, *stream, config);
    if (on_rep_done) {
      std::lock_guard<std::mutex> lock(hook_mutex);
      on_rep_done(r, *model);
    }
  };

  int workers = config.threads > 0 ? config.threads
                                   : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min(workers, config.repetitions));
  if (workers == 1) {
    for (int r = 0; r < config.repetitions; ++r) run_rep(r);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int r = next.fetch_add(1); r < config.repetitions; r = next.fetch_add(1)) {
          run_rep(r);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  // Aggregates across repetitions.
  std::vector<double> ces, gnorms, nodes, aurocs, transps;
  for (const auto& rep : report.reps) {
    ces.push_back(rep.mean_ce);
    gnorms.push_back(rep.mean_grad_norm);
    nodes.push_back(static_cast<double>(rep.final_node_count));
    if (rep.auroc) aurocs.push_back(*rep.auroc);
    if (rep.transparency_ratio) transps.push_back(*rep.transparency_ratio);
    report.truncated = report.truncated || rep.truncated;
    report.n_instances = std::max(report.n_instances, rep.instances_seen);
  }
  std::tie(report.ce_mean, report.ce_se) = mean_and_stderr(ces);
  report.grad_norm_mean = mean_and_stderr(gnorms).first;
  report.node_count_mean = mean_and_stderr(nodes).first;
  if (!aurocs.empty()) {
    const auto [m, se] = mean_and_stderr(aurocs);
    report.auroc_mean = m;
    report.auroc_se = se;
  }
  if (!transps.empty()) report.transparency_mean = mean_and_stderr(transps).first;

  // Element-wise mean of the window series over repetitions.
  std::size_t n_windows = report.reps.front().windows.size();
  for (const auto& rep : report.reps) n_windows = std::min(n_windows, rep.windows.size());
  for (std::size_t w = 0; w < n_windows; ++w) {
    WindowPoint point;
    point.instances = report.reps.front().windows[w].instances;
    double transp_sum = 0.0;
    int transp_n = 0;
    for (const auto& rep : report.reps) {
      point.ce += rep.windows[w].ce;
      point.grad_norm += rep.windows[w].grad_norm;
      point.node_count += rep.windows[w].node_count;
      if (rep.windows[w].transparency) {
        transp_sum += *rep.windows[w].transparency;
        transp_n += 1;
      }
    }
    const double n = static_cast<double>(report.reps.size());
    point.ce /= n;
    point.grad_norm /= n;
    point.node_count /= n;
    if (transp_n > 0) point.transparency = transp_sum / transp_n;
    report.windows.push_back(point);
  }
  return report;
}

ModelPool::ModelPool(std::vector<std::unique_ptr<StreamModel>> members, double decay)
    : members_(std::move(members)) {
  detail::require(members_.size() >= 2, "ModelPool: pool size must be >= 2");
  estimates_.assign(members_.size(), DecayedMean{decay, std::nullopt});
}

int ModelPool::serving_member() const {
  int best = 0;
  double best_value = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < estimates_.size(); ++i) {
    const double v =
        estimates_[i].value ? *estimates_[i].value : std::numeric_limits<double>::infinity();
    if (v < best_value) {
      best_value = v;
      best = static_cast<int>(i);
    }
  }
  return best;
}

Prediction ModelPool::predict(const Vector& x, bool with_transparency) {
  return members_[serving_member()]->predict(x, with_transparency);
}

double ModelPool::learn_one(const Vector& x, int y) {
  const int serving = serving_member();
  std::vector<double> losses(members_.size());
  for (std::size_t i = 0; i < members_.size(); ++i) {
    losses[i] = cross_entropy_from_proba(members_[i]->predict_proba(x), y);
    estimates_[i].add(losses[i]);
  }
  std::vector<int> order(members_.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return *estimates_[a].value < *estimates_[b].value;
  });
  const std::size_t n_train = (members_.size() + 1) / 2;
  last_trained_.assign(order.begin(), order.begin() + n_train);
  for (int idx : last_trained_) members_[idx]->learn_one(x, y);
  return losses[serving];
}

ModelDiagnostics ModelPool::diagnostics() const {
  return members_[serving_member()]->diagnostics();
}

void ModelPool::dump(std::ostream& os) const { members_[serving_member()]->dump(os); }

Vector pool_predict_train(ModelPool& pool, const Vector& x, int y) {
  Vector proba = pool.predict_proba(x);
  pool.learn_one(x, y);
  return proba;
}

std::optional<double> transparency_series(StreamModel& model, SampleStream& stream, long n) {
  double ratio_sum = 0.0;
  long rules = 0;
  Sample sample;
  for (long i = 0; i < n; ++i) {
    if (!stream.next(sample)) break;
    Prediction pred = model.predict(sample.features, true);
    if (pred.transparency) {
      ratio_sum += pred.transparency->ratio_sum;
      rules += pred.transparency->rule_count;
    }
    model.learn_one(sample.features, sample.label);
  }
  if (rules == 0) return std::nullopt;
  return ratio_sum / rules;
}

}  // namespace sohot
