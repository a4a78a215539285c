#include "sohot/streams.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace sohot {

namespace {

void validate_drift_positions(const DriftSpec& drift, long n_instances) {
  long prev = -1;
  for (long pos : drift.positions) {
    if (pos <= prev) throw StreamError("drift positions must be strictly increasing");
    if (pos >= n_instances) throw StreamError("drift position beyond stream length");
    prev = pos;
  }
}

}  // namespace

ConceptSchedule::ConceptSchedule(DriftKind kind, std::vector<long> positions, double width)
    : kind_(kind), positions_(std::move(positions)), width_(width) {
  if (kind_ == DriftKind::Gradual && width_ <= 0.0) {
    throw StreamError("gradual drift requires a positive width");
  }
}

int ConceptSchedule::concept_at(long t, Rng& rng) const {
  int base = 0;
  for (long pos : positions_) {
    if (t >= pos) ++base;
  }
  if (kind_ != DriftKind::Gradual) return base;
  // Inside a ramp the base concept has not fully taken over yet: t >= pos
  // counts the position, so back off by the complement of the ramp, and
  // ahead of a position the next concept already leaks in.
  std::size_t idx = 0;
  while (idx < positions_.size() && t >= positions_[idx]) ++idx;
  // idx = number of positions passed = base
  if (idx < positions_.size()) {
    const long pos = positions_[idx];
    const double start = static_cast<double>(pos) - width_ / 2.0;
    if (static_cast<double>(t) >= start) {
      const double p_next = std::min(1.0, (static_cast<double>(t) - start) / width_);
      return rng.bernoulli(p_next) ? base + 1 : base;
    }
  }
  if (idx > 0) {
    const long pos = positions_[idx - 1];
    const double end = static_cast<double>(pos) + width_ / 2.0;
    if (static_cast<double>(t) < end) {
      const double p_new = std::min(1.0, 0.5 + (static_cast<double>(t) - pos) / width_);
      return rng.bernoulli(p_new) ? base : base - 1;
    }
  }
  return base;
}

// --- SEA ---

SeaStream::SeaStream(const StreamSpec& spec)
    : spec_(spec),
      schedule_(spec.drift.kind, spec.drift.positions, spec.drift.width),
      rng_(spec.seed) {
  if (spec_.sea_thresholds.empty()) throw StreamError("sea: thresholds must not be empty");
  validate_drift_positions(spec_.drift, spec_.n_instances);
  if (spec_.drift.kind == DriftKind::Perturbation) {
    throw StreamError("sea: perturbation drift is not supported");
  }
  stats_.p = 3;
  stats_.k = 2;
}

bool SeaStream::produce(Sample& out) {
  if (t_ >= spec_.n_instances) return false;
  out.features.resize(3);
  for (int i = 0; i < 3; ++i) out.features[i] = rng_.uniform(0.0, 10.0);
  const int concept_index =
      schedule_.concept_at(t_, rng_) % static_cast<int>(spec_.sea_thresholds.size());
  out.label = label_for(out.features, spec_.sea_thresholds[concept_index]);
  if (spec_.sea_noise > 0.0 && rng_.bernoulli(spec_.sea_noise)) out.label = 1 - out.label;
  ++t_;
  return true;
}

// --- Agrawal ---

namespace {

bool between(double v, double lo, double hi) { return lo <= v && v <= hi; }

constexpr double kSalaryLo = 20000.0, kSalaryHi = 150000.0;
constexpr double kCommissionLo = 10000.0, kCommissionHi = 75000.0;
constexpr double kLoanLo = 0.0, kLoanHi = 500000.0;

}  // namespace

AgrawalStream::AgrawalStream(const StreamSpec& spec)
    : spec_(spec),
      schedule_(spec.drift.kind == DriftKind::Perturbation ? DriftKind::None : spec.drift.kind,
                spec.drift.positions, spec.drift.width),
      rng_(spec.seed) {
  if (spec_.agrawal_functions.empty()) throw StreamError("agrawal: function list is empty");
  for (int f : spec_.agrawal_functions) {
    if (f < 1 || f > 10) throw StreamError("agrawal: classification function must be in 1..10");
  }
  validate_drift_positions(spec_.drift, spec_.n_instances);
  stats_.p = 9;
  stats_.k = 2;
}

int AgrawalStream::classify(int function, double salary, double commission, int age, int elevel,
                            int car, int zipcode, double hvalue, int hyears, double loan) {
  (void)car;
  (void)zipcode;
  const double total = salary + commission;
  switch (function) {
    case 1:
      return (age < 40 || age >= 60) ? 0 : 1;
    case 2:
      if (age < 40) return between(salary, 50000, 100000) ? 0 : 1;
      if (age < 60) return between(salary, 75000, 125000) ? 0 : 1;
      return between(salary, 25000, 75000) ? 0 : 1;
    case 3:
      if (age < 40) return (elevel == 0 || elevel == 1) ? 0 : 1;
      if (age < 60) return (elevel >= 1 && elevel <= 3) ? 0 : 1;
      return (elevel >= 2 && elevel <= 4) ? 0 : 1;
    case 4:
      if (age < 40) {
        return (elevel == 0 || elevel == 1) ? (between(salary, 25000, 75000) ? 0 : 1)
                                            : (between(salary, 50000, 100000) ? 0 : 1);
      }
      if (age < 60) {
        return (elevel >= 1 && elevel <= 3) ? (between(salary, 50000, 100000) ? 0 : 1)
                                            : (between(salary, 75000, 125000) ? 0 : 1);
      }
      return (elevel >= 2 && elevel <= 4) ? (between(salary, 50000, 100000) ? 0 : 1)
                                          : (between(salary, 25000, 75000) ? 0 : 1);
    case 5:
      if (age < 40) {
        return between(salary, 50000, 100000) ? (between(loan, 100000, 300000) ? 0 : 1)
                                              : (between(loan, 200000, 400000) ? 0 : 1);
      }
      if (age < 60) {
        return between(salary, 75000, 125000) ? (between(loan, 200000, 400000) ? 0 : 1)
                                              : (between(loan, 300000, 500000) ? 0 : 1);
      }
      return between(salary, 25000, 75000) ? (between(loan, 300000, 500000) ? 0 : 1)
                                           : (between(loan, 100000, 300000) ? 0 : 1);
    case 6:
      if (age < 40) return between(total, 25000, 75000) ? 0 : 1;
      if (age < 60) return between(total, 50000, 100000) ? 0 : 1;
      return between(total, 25000, 75000) ? 0 : 1;
    case 7:
      return (2.0 * total / 3.0 - loan / 5.0 - 20000.0 > 0.0) ? 0 : 1;
    case 8:
      return (2.0 * total / 3.0 - 5000.0 * elevel - 20000.0 > 0.0) ? 0 : 1;
    case 9:
      return (2.0 * total / 3.0 - 5000.0 * elevel - loan / 5.0 - 10000.0 > 0.0) ? 0 : 1;
    case 10: {
      const double equity = hyears >= 20 ? hvalue * (hyears - 20) / 10.0 : 0.0;
      return (2.0 * total / 3.0 - 5000.0 * elevel + equity / 5.0 - 10000.0 > 0.0) ? 0 : 1;
    }
    default:
      throw StreamError("agrawal: classification function must be in 1..10");
  }
}

bool AgrawalStream::produce(Sample& out) {
  if (t_ >= spec_.n_instances) return false;
  const double salary = rng_.uniform(kSalaryLo, kSalaryHi);
  const double commission =
      salary >= 75000.0 ? 0.0 : rng_.uniform(kCommissionLo, kCommissionHi);
  const int age = 20 + static_cast<int>(rng_.uniform_int(61));
  const int elevel = static_cast<int>(rng_.uniform_int(5));
  const int car = 1 + static_cast<int>(rng_.uniform_int(20));
  const int zipcode = static_cast<int>(rng_.uniform_int(9));
  const double hvalue = (9.0 - zipcode) * 100000.0 * rng_.uniform(0.5, 1.5);
  const int hyears = 1 + static_cast<int>(rng_.uniform_int(30));
  const double loan = rng_.uniform(kLoanLo, kLoanHi);

  const int concept_index = schedule_.concept_at(t_, rng_) %
                      static_cast<int>(spec_.agrawal_functions.size());
  last_concept_ = concept_index;
  out.label = classify(spec_.agrawal_functions[concept_index], salary, commission, age, elevel, car,
                       zipcode, hvalue, hyears, loan);

  out.features.resize(9);
  out.features << salary, commission, static_cast<double>(age), static_cast<double>(elevel),
      static_cast<double>(car), static_cast<double>(zipcode), hvalue,
      static_cast<double>(hyears), loan;

  if (spec_.drift.kind == DriftKind::Perturbation && spec_.drift.magnitude > 0.0) {
    const double m = spec_.drift.magnitude;
    auto perturb = [&](double v, double lo, double hi) {
      const double noisy = v + rng_.uniform(-1.0, 1.0) * m * (hi - lo);
      return std::clamp(noisy, lo, hi);
    };
    out.features[0] = perturb(out.features[0], kSalaryLo, kSalaryHi);
    if (out.features[1] > 0.0) {
      out.features[1] = perturb(out.features[1], kCommissionLo, kCommissionHi);
    }
    out.features[2] = perturb(out.features[2], 20.0, 80.0);
    out.features[6] = perturb(out.features[6], 50000.0, 1350000.0);
    out.features[7] = perturb(out.features[7], 1.0, 30.0);
    out.features[8] = perturb(out.features[8], kLoanLo, kLoanHi);
  }
  ++t_;
  return true;
}

// --- Hyperplane ---

HyperplaneStream::HyperplaneStream(const StreamSpec& spec) : spec_(spec), rng_(spec.seed) {
  if (spec_.hyp_features < 1) throw StreamError("hyperplane: needs at least one feature");
  if (spec_.drift.kind != DriftKind::None) {
    throw StreamError("hyperplane: drift comes from hyp-magnitude, not a drift schedule");
  }
  stats_.p = spec_.hyp_features;
  stats_.k = 2;
  weights_.resize(stats_.p);
  directions_.resize(stats_.p);
  for (int j = 0; j < stats_.p; ++j) {
    weights_[j] = rng_.uniform();
    directions_[j] = 1.0;
  }
}

bool HyperplaneStream::produce(Sample& out) {
  if (t_ >= spec_.n_instances) return false;
  out.features.resize(stats_.p);
  for (int j = 0; j < stats_.p; ++j) out.features[j] = rng_.uniform();
  const double threshold = weights_.sum() / 2.0;
  out.label = weights_.dot(out.features) >= threshold ? 1 : 0;
  if (spec_.hyp_noise > 0.0 && rng_.bernoulli(spec_.hyp_noise)) out.label = 1 - out.label;
  if (spec_.hyp_magnitude > 0.0) {
    for (int j = 0; j < stats_.p; ++j) {
      if (rng_.bernoulli(spec_.hyp_flip_prob)) directions_[j] = -directions_[j];
      weights_[j] += directions_[j] * spec_.hyp_magnitude;
    }
  }
  ++t_;
  return true;
}

// --- RBF ---

RbfStream::RbfStream(const StreamSpec& spec) : spec_(spec), rng_(spec.seed) {
  if (spec_.rbf_centroids < 1 || spec_.rbf_features < 1 || spec_.rbf_classes < 2) {
    throw StreamError("rbf: invalid generator parameters");
  }
  if (spec_.drift.kind != DriftKind::None) {
    throw StreamError("rbf: drift comes from rbf-speed, not a drift schedule");
  }
  stats_.p = spec_.rbf_features;
  stats_.k = spec_.rbf_classes;
  centroids_.resize(spec_.rbf_centroids);
  double cumulative = 0.0;
  for (auto& c : centroids_) {
    c.center.resize(stats_.p);
    for (int j = 0; j < stats_.p; ++j) c.center[j] = rng_.uniform();
    c.label = static_cast<int>(rng_.uniform_int(stats_.k));
    c.weight = rng_.uniform();
    c.stddev = rng_.uniform();
    c.drift_direction.resize(stats_.p);
    for (int j = 0; j < stats_.p; ++j) c.drift_direction[j] = rng_.gaussian();
    c.drift_direction.normalize();
    cumulative += c.weight;
    cumulative_weight_.push_back(cumulative);
  }
}

bool RbfStream::produce(Sample& out) {
  if (t_ >= spec_.n_instances) return false;
  const double pick = rng_.uniform() * cumulative_weight_.back();
  const auto it = std::lower_bound(cumulative_weight_.begin(), cumulative_weight_.end(), pick);
  const auto& centroid = centroids_[it - cumulative_weight_.begin()];

  Vector direction(stats_.p);
  for (int j = 0; j < stats_.p; ++j) direction[j] = rng_.gaussian();
  direction.normalize();
  const double length = rng_.gaussian() * centroid.stddev;
  out.features = centroid.center + length * direction;
  out.label = centroid.label;

  if (spec_.rbf_speed > 0.0) {
    for (auto& c : centroids_) c.center += spec_.rbf_speed * c.drift_direction;
  }
  ++t_;
  return true;
}

// --- CSV ---

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

bool parse_number(const std::string& cell, double& value) {
  if (cell.empty()) return false;
  char* end = nullptr;
  value = std::strtod(cell.c_str(), &end);
  return end == cell.c_str() + cell.size();
}

}  // namespace

CsvData load_csv(const std::string& path, const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw StreamError("cannot open CSV file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw StreamError("CSV file is empty: " + path);
  const std::vector<std::string> header = split_csv_line(line);
  if (header.empty()) throw StreamError("CSV header row is empty: " + path);

  int label_index = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == label_column) label_index = static_cast<int>(i);
  }
  if (label_index < 0) {
    double as_number = 0.0;
    if (parse_number(label_column, as_number) && as_number >= 0 &&
        as_number < static_cast<double>(header.size())) {
      label_index = static_cast<int>(as_number);
    } else {
      throw StreamError("label column not found: " + label_column);
    }
  }

  std::vector<std::vector<std::string>> rows;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw StreamError("CSV parse error at line " + std::to_string(line_no) + ": expected " +
                        std::to_string(header.size()) + " cells, got " +
                        std::to_string(cells.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (cells[c].empty()) {
        throw StreamError("CSV parse error at line " + std::to_string(line_no) + ", column " +
                          header[c] + ": empty cell");
      }
    }
    rows.push_back(std::move(cells));
  }
  if (rows.empty()) throw StreamError("CSV file has no data rows: " + path);

  const int n_cols = static_cast<int>(header.size());
  std::vector<bool> numeric(n_cols, true);
  for (const auto& row : rows) {
    for (int c = 0; c < n_cols; ++c) {
      double v;
      if (!parse_number(row[c], v)) numeric[c] = false;
    }
  }

  CsvData data;
  data.p = n_cols - 1;
  if (data.p < 1) throw StreamError("CSV needs at least one feature column");
  for (int c = 0; c < n_cols; ++c) {
    if (c != label_index) data.feature_names.push_back(header[c]);
  }

  std::vector<std::unordered_map<std::string, double>> nominal_codes(n_cols);
  std::unordered_map<std::string, int> label_codes;
  data.samples.reserve(rows.size());
  for (const auto& row : rows) {
    Sample s;
    s.features.resize(data.p);
    int f = 0;
    for (int c = 0; c < n_cols; ++c) {
      if (c == label_index) {
        const auto [it, inserted] =
            label_codes.emplace(row[c], static_cast<int>(label_codes.size()));
        if (inserted) data.label_names.push_back(row[c]);
        s.label = it->second;
      } else {
        double v = 0.0;
        if (numeric[c]) {
          parse_number(row[c], v);
        } else {
          const auto [it, _] =
              nominal_codes[c].emplace(row[c], static_cast<double>(nominal_codes[c].size()));
          v = it->second;
        }
        s.features[f++] = v;
      }
    }
    data.samples.push_back(std::move(s));
  }
  data.k = static_cast<int>(label_codes.size());
  return data;
}

CsvStream::CsvStream(std::shared_ptr<const CsvData> data, long n_instances, bool shuffle,
                     unsigned long shuffle_seed)
    : data_(std::move(data)) {
  stats_.p = data_->p;
  stats_.k = data_->k;
  order_.resize(data_->samples.size());
  for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
  if (shuffle) {
    Rng rng(shuffle_seed);
    for (std::size_t i = order_.size(); i > 1; --i) {
      std::swap(order_[i - 1], order_[rng.uniform_int(static_cast<long>(i))]);
    }
  }
  limit_ = n_instances > 0 ? std::min<long>(n_instances, static_cast<long>(order_.size()))
                           : static_cast<long>(order_.size());
  if (n_instances > static_cast<long>(order_.size())) stats_.truncated = true;
}

bool CsvStream::produce(Sample& out) {
  if (pos_ >= limit_) return false;
  out = data_->samples[order_[pos_]];
  ++pos_;
  return true;
}

// --- Oversampling wrapper ---

OversampleStream::OversampleStream(std::unique_ptr<SampleStream> inner, long n_instances,
                                   std::vector<long> positions, double fraction,
                                   unsigned long seed)
    : inner_(std::move(inner)),
      positions_(std::move(positions)),
      fraction_(fraction),
      rng_(seed ^ 0x9e3779b97f4a7c15ull),
      limit_(n_instances) {
  stats_.p = inner_->feature_count();
  stats_.k = inner_->class_count();
  if (fraction_ <= 0.0 || fraction_ >= 1.0) {
    throw StreamError("oversample: fraction must be in (0, 1)");
  }
  if (positions_.empty() && limit_ != kUnboundedInstances) {
    // Default: ten contexts of equal length.
    for (int i = 1; i < 10; ++i) positions_.push_back(limit_ * i / 10);
  }
}

bool OversampleStream::pull_with_label(int wanted, bool match, Sample& out) {
  constexpr long kMaxPulls = 1000000;
  for (long pulls = 0; pulls < kMaxPulls; ++pulls) {
    if (!inner_->next(out)) return false;
    if ((out.label == wanted) == match) return true;
  }
  return false;
}

bool OversampleStream::produce(Sample& out) {
  if (t_ >= limit_) return false;
  int ctx = 0;
  for (long pos : positions_) {
    if (t_ >= pos) ++ctx;
  }
  if (ctx != context_) {
    context_ = ctx;
    context_class_ = static_cast<int>(rng_.uniform_int(stats_.k));
  }
  bool ok;
  if (stats_.k <= 1) {
    ok = inner_->next(out);
  } else if (rng_.bernoulli(fraction_)) {
    ok = pull_with_label(context_class_, true, out);
  } else {
    ok = pull_with_label(context_class_, false, out);
  }
  if (!ok) {
    stats_.truncated = true;
    return false;
  }
  ++t_;
  return true;
}

std::unique_ptr<SampleStream> make_stream(const StreamSpec& spec,
                                          std::shared_ptr<const CsvData> preloaded) {
  const bool oversampled = spec.drift.kind == DriftKind::Oversample;
  StreamSpec base = spec;
  if (oversampled) {
    base.drift = DriftSpec{};  // inner stream runs stationary
    base.n_instances = spec.kind == GeneratorKind::Csv ? 0 : kUnboundedInstances;
  }
  std::unique_ptr<SampleStream> stream;
  switch (base.kind) {
    case GeneratorKind::Sea:
      stream = std::make_unique<SeaStream>(base);
      break;
    case GeneratorKind::Agrawal:
      stream = std::make_unique<AgrawalStream>(base);
      break;
    case GeneratorKind::Hyperplane:
      stream = std::make_unique<HyperplaneStream>(base);
      break;
    case GeneratorKind::Rbf:
      stream = std::make_unique<RbfStream>(base);
      break;
    case GeneratorKind::Csv: {
      auto data = preloaded ? std::move(preloaded)
                            : std::make_shared<const CsvData>(
                                  load_csv(base.csv_path, base.label_column));
      stream = std::make_unique<CsvStream>(data, base.n_instances, base.shuffle, base.seed);
      break;
    }
  }
  if (oversampled) {
    validate_drift_positions(spec.drift, spec.n_instances);
    stream = std::make_unique<OversampleStream>(std::move(stream), spec.n_instances,
                                                spec.drift.positions,
                                                spec.drift.oversample_fraction, spec.seed);
  }
  return stream;
}

}  // namespace sohot
