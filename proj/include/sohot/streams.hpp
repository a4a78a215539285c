#pragma once

#include "sohot/rng.hpp"
#include "sohot/types.hpp"

#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace sohot {

/// Raised for malformed stream configuration or unreadable input data.
class StreamError : public std::runtime_error {
 public:
  explicit StreamError(const std::string& what) : std::runtime_error(what) {}
};

enum class DriftKind { None, Abrupt, Gradual, Perturbation, Oversample };

struct DriftSpec {
  DriftKind kind = DriftKind::None;
  std::vector<long> positions;       // strictly increasing, < n_instances
  double width = 0.0;                // gradual: ramp length in instances
  double magnitude = 0.0;            // perturbation: feature-noise fraction
  double oversample_fraction = 0.75; // oversample: target class share
};

enum class GeneratorKind { Sea, Agrawal, Hyperplane, Rbf, Csv };

/// Declarative stream description; every generator is a pure function of
/// (spec, seed).
struct StreamSpec {
  GeneratorKind kind = GeneratorKind::Sea;
  long n_instances = 100000;
  unsigned long seed = 1;
  DriftSpec drift;

  // sea
  std::vector<double> sea_thresholds{8.0, 9.0, 7.0, 9.5};
  double sea_noise = 0.1;

  // agrawal: classification function per concept, indices 1..10
  std::vector<int> agrawal_functions{1, 2};

  // hyperplane
  int hyp_features = 10;
  double hyp_magnitude = 0.001;
  double hyp_noise = 0.05;
  double hyp_flip_prob = 0.1;

  // rbf
  int rbf_centroids = 50;
  int rbf_features = 10;
  int rbf_classes = 5;
  double rbf_speed = 0.0001;

  // csv
  std::string csv_path;
  std::string label_column;  // header name, or numeric index as text
  bool shuffle = true;
};

struct StreamStats {
  int p = 0;
  int k = 0;
  long n_emitted = 0;
  bool truncated = false;
};

/// Single-consumer sample iterator.
class SampleStream {
 public:
  virtual ~SampleStream() = default;

  /// Fills `out` and returns true, or returns false once exhausted.
  bool next(Sample& out) {
    if (!produce(out)) return false;
    stats_.n_emitted += 1;
    return true;
  }

  int feature_count() const { return stats_.p; }
  int class_count() const { return stats_.k; }
  const StreamStats& stats() const { return stats_; }

 protected:
  virtual bool produce(Sample& out) = 0;
  StreamStats stats_;
};

/// Piecewise concept index over time: abrupt steps at each position, or a
/// per-instance Bernoulli draw whose probability ramps linearly from 0 to 1
/// across [position - width/2, position + width/2] for gradual drift.
class ConceptSchedule {
 public:
  ConceptSchedule() = default;
  ConceptSchedule(DriftKind kind, std::vector<long> positions, double width);

  int concept_at(long t, Rng& rng) const;

 private:
  DriftKind kind_ = DriftKind::None;
  std::vector<long> positions_;
  double width_ = 0.0;
};

/// SEA: 3 uniform features in [0, 10], class 1 iff f0 + f1 <= threshold of
/// the active concept, with label noise.
class SeaStream final : public SampleStream {
 public:
  explicit SeaStream(const StreamSpec& spec);
  static int label_for(const Vector& features, double threshold) {
    return features[0] + features[1] <= threshold ? 1 : 0;
  }

 protected:
  bool produce(Sample& out) override;

 private:
  StreamSpec spec_;
  ConceptSchedule schedule_;
  Rng rng_;
  long t_ = 0;
};

/// Agrawal: the classic 9-attribute loan schema with classification
/// functions 1..10; supports abrupt/gradual function drift and feature
/// perturbation.
class AgrawalStream final : public SampleStream {
 public:
  explicit AgrawalStream(const StreamSpec& spec);
  static int classify(int function, double salary, double commission, int age, int elevel,
                      int car, int zipcode, double hvalue, int hyears, double loan);
  int last_concept() const { return last_concept_; }

 protected:
  bool produce(Sample& out) override;

 private:
  StreamSpec spec_;
  ConceptSchedule schedule_;
  Rng rng_;
  long t_ = 0;
  int last_concept_ = 0;
};

/// Rotating hyperplane: uniform features in [0, 1], label by a drifting
/// linear threshold at half the weight mass, with label noise.
class HyperplaneStream final : public SampleStream {
 public:
  explicit HyperplaneStream(const StreamSpec& spec);
  const Vector& current_weights() const { return weights_; }

 protected:
  bool produce(Sample& out) override;

 private:
  StreamSpec spec_;
  Rng rng_;
  Vector weights_;
  Vector directions_;
  long t_ = 0;
};

/// Random RBF: weighted Gaussian centroids with fixed class labels, drifting
/// along per-centroid unit directions at a configured speed.
class RbfStream final : public SampleStream {
 public:
  explicit RbfStream(const StreamSpec& spec);

 protected:
  bool produce(Sample& out) override;

 private:
  struct Centroid {
    Vector center;
    Vector drift_direction;
    int label = 0;
    double weight = 0.0;
    double stddev = 0.0;
  };
  StreamSpec spec_;
  Rng rng_;
  std::vector<Centroid> centroids_;
  std::vector<double> cumulative_weight_;
  long t_ = 0;
};

/// Materialized CSV data: numeric columns pass through, nominal columns are
/// integer-coded by first appearance, labels are mapped to [0, k).
struct CsvData {
  std::vector<Sample> samples;
  std::vector<std::string> feature_names;
  std::vector<std::string> label_names;  // label code -> original text
  int p = 0;
  int k = 0;
};

/// Parses a header-first comma-separated file. Throws StreamError with the
/// offending line number on malformed input.
CsvData load_csv(const std::string& path, const std::string& label_column);

class CsvStream final : public SampleStream {
 public:
  CsvStream(std::shared_ptr<const CsvData> data, long n_instances, bool shuffle,
            unsigned long shuffle_seed);

 protected:
  bool produce(Sample& out) override;

 private:
  std::shared_ptr<const CsvData> data_;
  std::vector<std::size_t> order_;
  long limit_ = 0;
  long pos_ = 0;
};

/// Re-samples an inner stream so that within each context (the stretches
/// between drift positions) a randomly selected class makes up roughly the
/// configured fraction of the output.
class OversampleStream final : public SampleStream {
 public:
  OversampleStream(std::unique_ptr<SampleStream> inner, long n_instances,
                   std::vector<long> positions, double fraction, unsigned long seed);

 protected:
  bool produce(Sample& out) override;

 private:
  bool pull_with_label(int wanted, bool match, Sample& out);

  std::unique_ptr<SampleStream> inner_;
  std::vector<long> positions_;
  double fraction_;
  Rng rng_;
  long limit_;
  long t_ = 0;
  int context_ = -1;
  int context_class_ = 0;
};

/// Builds the configured generator, applying the oversample wrapper when
/// requested. An already-parsed CSV may be passed to avoid re-reading the
/// file for every repetition.
std::unique_ptr<SampleStream> make_stream(const StreamSpec& spec,
                                          std::shared_ptr<const CsvData> preloaded = nullptr);

constexpr long kUnboundedInstances = std::numeric_limits<long>::max();

}  // namespace sohot
