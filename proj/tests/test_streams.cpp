#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sohot/streams.hpp"

#include "test_util.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

using namespace sohot;

namespace {

std::vector<Sample> drain(SampleStream& stream, long max = -1) {
  std::vector<Sample> out;
  Sample s;
  while ((max < 0 || static_cast<long>(out.size()) < max) && stream.next(s)) out.push_back(s);
  return out;
}

bool same_sequence(const std::vector<Sample>& a, const std::vector<Sample>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].label != b[i].label) return false;
    if ((a[i].features - b[i].features).lpNorm<Eigen::Infinity>() != 0.0) return false;
  }
  return true;
}

StreamSpec sea_spec(long n, unsigned long seed = 1) {
  StreamSpec spec;
  spec.kind = GeneratorKind::Sea;
  spec.n_instances = n;
  spec.seed = seed;
  return spec;
}

}  // namespace

TEST_CASE("sea: boundary label logic and noise-free concepts") {
  Vector f(3);
  f << 0.0, 0.0, 5.0;
  CHECK(SeaStream::label_for(f, 8.0) == 1);
  f << 5.0, 4.0, 0.0;
  CHECK(SeaStream::label_for(f, 8.0) == 0);  // 9 > 8
  CHECK(SeaStream::label_for(f, 9.0) == 1);  // 9 <= 9

  StreamSpec spec = sea_spec(2000);
  spec.sea_noise = 0.0;
  auto stream = make_stream(spec);
  CHECK(stream->feature_count() == 3);
  CHECK(stream->class_count() == 2);
  for (const Sample& s : drain(*stream)) {
    CHECK(s.label == SeaStream::label_for(s.features, 8.0));
    CHECK(s.features.minCoeff() >= 0.0);
    CHECK(s.features.maxCoeff() <= 10.0);
  }
}

TEST_CASE("sea: identical seeds give identical sequences, drift changes the labeling") {
  StreamSpec spec = sea_spec(3000);
  spec.drift.kind = DriftKind::Abrupt;
  spec.drift.positions = {1500};
  auto a = drain(*make_stream(spec));
  auto b = drain(*make_stream(spec));
  CHECK(same_sequence(a, b));

  spec.seed = 2;
  auto c = drain(*make_stream(spec));
  CHECK_FALSE(same_sequence(a, c));

  // pre/post drift label functions disagree on a positive fraction
  long disagreements = 0;
  StreamSpec clean = sea_spec(10000);
  clean.sea_noise = 0.0;
  for (const Sample& s : drain(*make_stream(clean))) {
    if (SeaStream::label_for(s.features, 8.0) != SeaStream::label_for(s.features, 9.0)) {
      ++disagreements;
    }
  }
  CHECK(disagreements > 0);
  // region between the thresholds has mass ~|9-8| dependent; loosely bracket it
  CHECK(disagreements > 400);
  CHECK(disagreements < 2000);
}

TEST_CASE("sea: abrupt drift switches the concept exactly at the position") {
  StreamSpec spec = sea_spec(4000);
  spec.sea_noise = 0.0;
  spec.drift.kind = DriftKind::Abrupt;
  spec.drift.positions = {2000};
  auto samples = drain(*make_stream(spec));
  for (long t = 0; t < 4000; ++t) {
    const double theta = t < 2000 ? 8.0 : 9.0;
    CHECK(samples[t].label == SeaStream::label_for(samples[t].features, theta));
  }
}

TEST_CASE("agrawal: function 1 depends only on age") {
  Rng rng(7);
  for (int i = 0; i < 2000; ++i) {
    const int age = 20 + static_cast<int>(rng.uniform_int(61));
    const int expected = (age < 40 || age >= 60) ? 0 : 1;
    // resample every other attribute: the label must not move
    const int got = AgrawalStream::classify(
        1, rng.uniform(20000, 150000), rng.uniform(0, 75000), age,
        static_cast<int>(rng.uniform_int(5)), 1 + static_cast<int>(rng.uniform_int(20)),
        static_cast<int>(rng.uniform_int(9)), rng.uniform(50000, 1000000),
        1 + static_cast<int>(rng.uniform_int(30)), rng.uniform(0, 500000));
    CHECK(got == expected);
  }
}

TEST_CASE("agrawal: emitted labels match the declared function of the active concept") {
  StreamSpec spec;
  spec.kind = GeneratorKind::Agrawal;
  spec.n_instances = 3000;
  spec.agrawal_functions = {1};
  auto stream = make_stream(spec);
  CHECK(stream->feature_count() == 9);
  for (const Sample& s : drain(*stream)) {
    const int age = static_cast<int>(s.features[2]);
    CHECK(s.label == ((age < 40 || age >= 60) ? 0 : 1));
  }
}

TEST_CASE("agrawal: gradual drift mixes concepts evenly across the ramp") {
  StreamSpec spec;
  spec.kind = GeneratorKind::Agrawal;
  spec.n_instances = 40000;
  spec.seed = 11;
  spec.agrawal_functions = {1, 2};
  spec.drift.kind = DriftKind::Gradual;
  spec.drift.positions = {20000};
  spec.drift.width = 10000;

  AgrawalStream stream(spec);
  Sample s;
  long in_window = 0, post_concept = 0;
  long before_window_post = 0, after_window_pre = 0;
  for (long t = 0; t < spec.n_instances; ++t) {
    REQUIRE(stream.next(s));
    const int concept_index = stream.last_concept();
    if (t < 15000) {
      before_window_post += concept_index == 1 ? 1 : 0;
    } else if (t >= 25000) {
      after_window_pre += concept_index == 0 ? 1 : 0;
    } else {
      ++in_window;
      post_concept += concept_index == 1 ? 1 : 0;
    }
  }
  CHECK(before_window_post == 0);
  CHECK(after_window_pre == 0);
  // linear ramp integrates to one half over the full window
  const double franction_post = static_cast<double>(post_concept) / in_window;
  CHECK(franction_post == doctest::Approx(0.5).epsilon(0.1));

  // determinism
  auto a = drain(*make_stream(spec), 500);
  auto b = drain(*make_stream(spec), 500);
  CHECK(same_sequence(a, b));
}

TEST_CASE("agrawal: perturbation keeps features inside their declared ranges") {
  StreamSpec spec;
  spec.kind = GeneratorKind::Agrawal;
  spec.n_instances = 2000;
  spec.agrawal_functions = {2};
  spec.drift.kind = DriftKind::Perturbation;
  spec.drift.magnitude = 0.1;
  for (const Sample& s : drain(*make_stream(spec))) {
    CHECK(s.features[0] >= 20000.0);
    CHECK(s.features[0] <= 150000.0);
    CHECK(s.features[2] >= 20.0);
    CHECK(s.features[2] <= 80.0);
  }
}

TEST_CASE("agrawal rejects invalid function indices") {
  StreamSpec spec;
  spec.kind = GeneratorKind::Agrawal;
  spec.agrawal_functions = {11};
  CHECK_THROWS_AS(make_stream(spec), StreamError);
  spec.agrawal_functions = {0};
  CHECK_THROWS_AS(make_stream(spec), StreamError);
}

TEST_CASE("hyperplane: stationary concept is learnable by a linear model") {
  StreamSpec spec;
  spec.kind = GeneratorKind::Hyperplane;
  spec.n_instances = 30000;
  spec.seed = 3;
  spec.hyp_magnitude = 0.0;
  auto stream = make_stream(spec);
  CHECK(stream->feature_count() == 10);

  // tiny online logistic regression as the sanity probe
  Vector w = Vector::Zero(11);
  long correct = 0, seen = 0, correct_tail = 0, seen_tail = 0;
  Sample s;
  long t = 0;
  while (stream->next(s)) {
    Vector ext(11);
    ext << s.features, 1.0;
    const double z = w.dot(ext);
    const int pred = z >= 0 ? 1 : 0;
    ++seen;
    correct += pred == s.label ? 1 : 0;
    if (t >= 10000) {
      ++seen_tail;
      correct_tail += pred == s.label ? 1 : 0;
    }
    const double p = 1.0 / (1.0 + std::exp(-z));
    w += 0.1 * (s.label - p) * ext;
    ++t;
  }
  CHECK(static_cast<double>(correct_tail) / seen_tail > 0.9);
}

TEST_CASE("hyperplane: weight drift is bounded by t * magnitude") {
  StreamSpec spec;
  spec.kind = GeneratorKind::Hyperplane;
  spec.n_instances = 5000;
  spec.hyp_magnitude = 0.001;
  HyperplaneStream stream(spec);
  const Vector w0 = stream.current_weights();
  Sample s;
  for (long t = 1; t <= 5000; ++t) {
    REQUIRE(stream.next(s));
    const Vector drift = stream.current_weights() - w0;
    CHECK(drift.lpNorm<Eigen::Infinity>() <= t * 0.001 + 1e-12);
  }
  auto a = drain(*make_stream(spec));
  auto b = drain(*make_stream(spec));
  CHECK(same_sequence(a, b));
}

TEST_CASE("rbf: labels in range, stationary when speed is zero, deterministic") {
  StreamSpec spec;
  spec.kind = GeneratorKind::Rbf;
  spec.n_instances = 10000;
  spec.seed = 5;
  spec.rbf_speed = 0.0;
  auto samples = drain(*make_stream(spec));
  REQUIRE(samples.size() == 10000);

  std::map<int, std::pair<Vector, long>> first_half, second_half;
  for (long t = 0; t < 10000; ++t) {
    const Sample& s = samples[t];
    CHECK(s.label >= 0);
    CHECK(s.label < 5);
    auto& bucket = t < 5000 ? first_half : second_half;
    auto [it, inserted] = bucket.emplace(s.label, std::make_pair(Vector::Zero(10), 0L));
    it->second.first += s.features;
    it->second.second += 1;
  }
  // per-class means of both halves agree within 3 combined standard errors
  for (auto& [label, acc1] : first_half) {
    REQUIRE(second_half.count(label) == 1);
    auto& acc2 = second_half[label];
    const Vector m1 = acc1.first / acc1.second;
    const Vector m2 = acc2.first / acc2.second;
    // conservative per-feature scale bound: centers and offsets live in O(1)
    const double se = 1.0 * std::sqrt(1.0 / acc1.second + 1.0 / acc2.second);
    for (int f = 0; f < 10; ++f) CHECK(std::abs(m1[f] - m2[f]) < 3.0 * se);
  }

  auto again = drain(*make_stream(spec));
  CHECK(same_sequence(samples, again));
}

TEST_CASE("csv: ordering, shuffling, typing and errors") {
  const std::string path = "/tmp/sohot_test_stream.csv";
  {
    std::ofstream out(path);
    out << "height,color,target\n";
    out << "1.5,red,yes\n";
    out << "2.5,blue,no\n";
    out << "3.5,red,yes\n";
  }

  SUBCASE("no shuffle preserves file order; nominal columns are coded") {
    auto data = std::make_shared<const CsvData>(load_csv(path, "target"));
    CHECK(data->p == 2);
    CHECK(data->k == 2);
    CsvStream stream(data, 0, false, 1);
    auto rows = drain(stream);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].features[0] == 1.5);
    CHECK(rows[0].features[1] == 0.0);  // "red" first seen
    CHECK(rows[1].features[1] == 1.0);  // "blue"
    CHECK(rows[2].features[1] == 0.0);
    CHECK(rows[0].label == 0);  // "yes" first seen
    CHECK(rows[1].label == 1);
    CHECK(rows[2].label == 0);
  }

  SUBCASE("label column by index") {
    auto data = load_csv(path, "2");
    CHECK(data.k == 2);
    CHECK(data.label_names[0] == "yes");
  }

  SUBCASE("same seed reproduces the permutation, different seeds change it") {
    const std::string big = "/tmp/sohot_test_big.csv";
    {
      std::ofstream out(big);
      out << "a,y\n";
      for (int i = 0; i < 100; ++i) out << i << "," << i % 3 << "\n";
    }
    auto data = std::make_shared<const CsvData>(load_csv(big, "y"));
    auto seq1 = drain(*std::make_unique<CsvStream>(data, 0, true, 7));
    auto seq2 = drain(*std::make_unique<CsvStream>(data, 0, true, 7));
    auto seq3 = drain(*std::make_unique<CsvStream>(data, 0, true, 8));
    CHECK(same_sequence(seq1, seq2));
    CHECK_FALSE(same_sequence(seq1, seq3));
    // a permutation, not a re-draw
    std::multiset<double> orig, shuf;
    for (const auto& s : seq1) shuf.insert(s.features[0]);
    for (int i = 0; i < 100; ++i) orig.insert(i);
    CHECK(orig == shuf);
    std::remove(big.c_str());
  }

  SUBCASE("missing label column and malformed rows raise line-numbered errors") {
    CHECK_THROWS_AS(load_csv(path, "missing"), StreamError);
    const std::string bad = "/tmp/sohot_test_bad.csv";
    {
      std::ofstream out(bad);
      out << "a,b,y\n1,2,0\n1,2\n";
    }
    CHECK_THROWS_WITH_AS(load_csv(bad, "y"),
                         doctest::Contains("line 3"), StreamError);
    {
      std::ofstream out(bad);
      out << "a,b,y\n1,,0\n";
    }
    CHECK_THROWS_WITH_AS(load_csv(bad, "y"),
                         doctest::Contains("line 2"), StreamError);
    std::remove(bad.c_str());
  }

  std::remove(path.c_str());
}

TEST_CASE("oversampling: each context is dominated by its selected class") {
  StreamSpec spec;
  spec.kind = GeneratorKind::Rbf;
  spec.n_instances = 20000;
  spec.seed = 13;
  spec.rbf_speed = 0.0;
  spec.drift.kind = DriftKind::Oversample;
  auto stream = make_stream(spec);
  auto samples = drain(*stream);
  REQUIRE(samples.size() == 20000);

  const long context_len = 2000;
  for (int ctx = 0; ctx < 10; ++ctx) {
    std::map<int, long> counts;
    for (long t = ctx * context_len; t < (ctx + 1) * context_len; ++t) {
      counts[samples[t].label] += 1;
    }
    long top = 0;
    for (auto& [label, n] : counts) top = std::max(top, n);
    const double fraction = static_cast<double>(top) / context_len;
    CHECK(fraction >= 0.70);
    CHECK(fraction <= 0.80);
  }

  auto again = drain(*make_stream(spec));
  CHECK(same_sequence(samples, again));
}

TEST_CASE("oversampling a single-class stream degenerates to identity") {
  const std::string path = "/tmp/sohot_test_oneclass.csv";
  {
    std::ofstream out(path);
    out << "a,y\n";
    for (int i = 0; i < 50; ++i) out << i << ",same\n";
  }
  StreamSpec spec;
  spec.kind = GeneratorKind::Csv;
  spec.csv_path = path;
  spec.label_column = "y";
  spec.shuffle = false;
  spec.n_instances = 50;
  spec.drift.kind = DriftKind::Oversample;
  auto samples = drain(*make_stream(spec));
  REQUIRE(samples.size() == 50);
  for (int i = 0; i < 50; ++i) CHECK(samples[i].features[0] == i);
  std::remove(path.c_str());
}

TEST_CASE("stream dimensions never change mid-stream") {
  for (auto kind : {GeneratorKind::Sea, GeneratorKind::Agrawal, GeneratorKind::Hyperplane,
                    GeneratorKind::Rbf}) {
    StreamSpec spec;
    spec.kind = kind;
    spec.n_instances = 500;
    auto stream = make_stream(spec);
    Sample s;
    while (stream->next(s)) {
      CHECK(s.features.size() == stream->feature_count());
      CHECK(s.label >= 0);
      CHECK(s.label < stream->class_count());
      CHECK(s.features.allFinite());
    }
  }
}

TEST_CASE("invalid drift schedules are rejected") {
  StreamSpec spec = sea_spec(1000);
  spec.drift.kind = DriftKind::Abrupt;
  spec.drift.positions = {500, 400};
  CHECK_THROWS_AS(make_stream(spec), StreamError);
  spec.drift.positions = {1500};
  CHECK_THROWS_AS(make_stream(spec), StreamError);
  spec.drift.positions = {500};
  CHECK_NOTHROW(make_stream(spec));
}
