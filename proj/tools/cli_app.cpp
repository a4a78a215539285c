#include "cli_app.hpp"

#include "sohot/eval.hpp"
#include "sohot/models.hpp"
#include "sohot/streams.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace sohot::cli {

namespace {

class CliError : public std::runtime_error {
 public:
  explicit CliError(const std::string& what) : std::runtime_error(what) {}
};

struct CliOptions {
  std::string config_file;

  std::string model = "sohot";
  std::string stream = "sea";
  std::string csv;
  std::string label_column;
  long instances = 100000;
  long window = 1000;
  int reps = 1;
  unsigned long seed = 1;
  double alpha = 0.3;
  double gamma = 1.0;
  int max_depth = 7;
  double delta = 1e-7;
  double tau = 0.05;
  double epsilon_s = 0.25;
  long grace = 200;
  double learning_rate = 1e-2;
  std::string leaf_prediction = "nba";
  long node_limit = 0;  // 0: unset (ht-limit then defaults to 127)
  std::string drift_kind = "none";
  std::string drift_at;      // comma-separated instance positions
  double drift_width = 0.0;  // gradual ramp length; perturbation magnitude
  std::string out = "report.csv";
  std::string dump_tree;
  bool plot = false;
  bool no_shuffle = false;

  // compare / transparency
  std::string models = "sohot,ht";
  std::string alpha_grid = "0,0.2,0.4,0.6,0.8,1";

  // config-file-only stream and pool extras
  std::string pool_base = "sohot";
  double sea_noise = 0.1;
  std::string sea_thresholds = "8,9,7,9.5";
  std::string agrawal_functions = "1,2";
  double hyp_magnitude = 0.001;
  double hyp_noise = 0.05;
  double hyp_flip_prob = 0.1;
  int rbf_centroids = 50;
  int rbf_features = 10;
  int rbf_classes = 5;
  double rbf_speed = 0.0001;
  double oversample_fraction = 0.75;
  int threads = 0;
};

// --- small parsing helpers ---

bool parse_double(const std::string& text, double& out) {
  char* end = nullptr;
  out = std::strtod(text.c_str(), &end);
  return !text.empty() && end == text.c_str() + text.size();
}

bool parse_long(const std::string& text, long& out) {
  char* end = nullptr;
  out = std::strtol(text.c_str(), &end, 10);
  return !text.empty() && end == text.c_str() + text.size();
}

bool parse_bool(const std::string& text, bool& out) {
  if (text == "true" || text == "1") {
    out = true;
    return true;
  }
  if (text == "false" || text == "0") {
    out = false;
    return true;
  }
  return false;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

std::vector<double> parse_double_list(const std::string& text, const std::string& key) {
  std::vector<double> values;
  for (const std::string& item : split_list(text)) {
    double v;
    if (!parse_double(item, v)) throw CliError("invalid value for " + key + ": '" + item + "'");
    values.push_back(v);
  }
  return values;
}

std::vector<long> parse_long_list(const std::string& text, const std::string& key) {
  std::vector<long> values;
  for (const std::string& item : split_list(text)) {
    long v;
    if (!parse_long(item, v)) throw CliError("invalid value for " + key + ": '" + item + "'");
    values.push_back(v);
  }
  return values;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

// --- config file keys (flag names without the leading dashes) ---

struct KeyBinding {
  const char* key;
  std::function<std::string(const CliOptions&)> get;
  std::function<bool(CliOptions&, const std::string&)> set;
};

std::vector<KeyBinding> key_bindings() {
  auto str = [](const char* key, std::string CliOptions::* field) {
    return KeyBinding{key, [field](const CliOptions& o) { return o.*field; },
                      [field](CliOptions& o, const std::string& v) {
                        o.*field = v;
                        return true;
                      }};
  };
  auto dbl = [](const char* key, double CliOptions::* field) {
    return KeyBinding{key, [field](const CliOptions& o) { return fmt(o.*field); },
                      [field](CliOptions& o, const std::string& v) {
                        return parse_double(v, o.*field);
                      }};
  };
  auto lng = [](const char* key, long CliOptions::* field) {
    return KeyBinding{key, [field](const CliOptions& o) { return std::to_string(o.*field); },
                      [field](CliOptions& o, const std::string& v) {
                        return parse_long(v, o.*field);
                      }};
  };
  auto integer = [](const char* key, int CliOptions::* field) {
    return KeyBinding{key, [field](const CliOptions& o) { return std::to_string(o.*field); },
                      [field](CliOptions& o, const std::string& v) {
                        long l;
                        if (!parse_long(v, l)) return false;
                        o.*field = static_cast<int>(l);
                        return true;
                      }};
  };
  auto boolean = [](const char* key, bool CliOptions::* field) {
    return KeyBinding{key,
                      [field](const CliOptions& o) {
                        return std::string(o.*field ? "true" : "false");
                      },
                      [field](CliOptions& o, const std::string& v) {
                        return parse_bool(v, o.*field);
                      }};
  };

  return {
      str("model", &CliOptions::model),
      str("stream", &CliOptions::stream),
      str("csv", &CliOptions::csv),
      str("label-column", &CliOptions::label_column),
      lng("instances", &CliOptions::instances),
      lng("window", &CliOptions::window),
      integer("reps", &CliOptions::reps),
      KeyBinding{"seed", [](const CliOptions& o) { return std::to_string(o.seed); },
                 [](CliOptions& o, const std::string& v) {
                   long l;
                   if (!parse_long(v, l) || l < 0) return false;
                   o.seed = static_cast<unsigned long>(l);
                   return true;
                 }},
      dbl("alpha", &CliOptions::alpha),
      dbl("gamma", &CliOptions::gamma),
      integer("max-depth", &CliOptions::max_depth),
      dbl("delta", &CliOptions::delta),
      dbl("tau", &CliOptions::tau),
      dbl("epsilon-s", &CliOptions::epsilon_s),
      lng("grace", &CliOptions::grace),
      dbl("learning-rate", &CliOptions::learning_rate),
      str("leaf-prediction", &CliOptions::leaf_prediction),
      lng("node-limit", &CliOptions::node_limit),
      str("drift-kind", &CliOptions::drift_kind),
      str("drift-at", &CliOptions::drift_at),
      dbl("drift-width", &CliOptions::drift_width),
      str("out", &CliOptions::out),
      str("dump-tree", &CliOptions::dump_tree),
      boolean("plot", &CliOptions::plot),
      boolean("no-shuffle", &CliOptions::no_shuffle),
      str("models", &CliOptions::models),
      str("alpha-grid", &CliOptions::alpha_grid),
      str("pool-base", &CliOptions::pool_base),
      dbl("sea-noise", &CliOptions::sea_noise),
      str("sea-thresholds", &CliOptions::sea_thresholds),
      str("agrawal-functions", &CliOptions::agrawal_functions),
      dbl("hyp-magnitude", &CliOptions::hyp_magnitude),
      dbl("hyp-noise", &CliOptions::hyp_noise),
      dbl("hyp-flip-prob", &CliOptions::hyp_flip_prob),
      integer("rbf-centroids", &CliOptions::rbf_centroids),
      integer("rbf-features", &CliOptions::rbf_features),
      integer("rbf-classes", &CliOptions::rbf_classes),
      dbl("rbf-speed", &CliOptions::rbf_speed),
      dbl("oversample-fraction", &CliOptions::oversample_fraction),
      integer("threads", &CliOptions::threads),
  };
}

/// Flat `key = value` file, one pair per line, '#' comments.
void apply_config_file(CliOptions& options, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CliError("cannot open config file: " + path);
  const auto keys = key_bindings();
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto strip = [](const std::string& s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      const auto e = s.find_last_not_of(" \t\r");
      return s.substr(b, e - b + 1);
    };
    if (strip(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw CliError("config file line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = strip(line.substr(0, eq));
    const std::string value = strip(line.substr(eq + 1));
    bool found = false;
    for (const auto& binding : keys) {
      if (key == binding.key) {
        if (!binding.set(options, value)) {
          throw CliError("invalid value for config key '" + key + "': '" + value + "'");
        }
        found = true;
        break;
      }
    }
    if (!found) throw CliError("unknown config key '" + key + "'");
  }
}

const std::vector<std::string> kModelNames = {"sohot", "ht", "ht-limit", "st", "pool"};
const std::vector<std::string> kStreamNames = {"sea", "agrawal", "hyperplane", "rbf", "csv"};
const std::vector<std::string> kDriftNames = {"none", "abrupt", "gradual", "perturbation",
                                              "oversample"};

bool contains(const std::vector<std::string>& names, const std::string& v) {
  return std::find(names.begin(), names.end(), v) != names.end();
}

std::string joined(const std::vector<std::string>& names) {
  std::string out;
  for (const auto& n : names) out += (out.empty() ? "" : "|") + n;
  return out;
}

void validate(const CliOptions& o) {
  if (!contains(kModelNames, o.model)) {
    throw CliError("invalid value for --model: '" + o.model + "' (expected " +
                   joined(kModelNames) + ")");
  }
  if (!contains(kStreamNames, o.stream)) {
    throw CliError("invalid value for --stream: '" + o.stream + "' (expected " +
                   joined(kStreamNames) + ")");
  }
  if (!contains(kDriftNames, o.drift_kind)) {
    throw CliError("invalid value for --drift-kind: '" + o.drift_kind + "' (expected " +
                   joined(kDriftNames) + ")");
  }
  if (o.stream == "csv" && o.csv.empty()) throw CliError("--csv is required for --stream csv");
  if (o.stream == "csv" && o.label_column.empty()) {
    throw CliError("--label-column is required for --stream csv");
  }
  if (o.instances < 1) throw CliError("invalid value for --instances: must be >= 1");
  if (o.window < 1) throw CliError("invalid value for --window: must be >= 1");
  if (o.reps < 1) throw CliError("invalid value for --reps: must be >= 1");
  if (o.alpha < 0.0 || o.alpha > 1.0) {
    throw CliError("invalid value for --alpha: must be in [0, 1]");
  }
  if (o.gamma <= 0.0) throw CliError("invalid value for --gamma: must be > 0");
  if (o.max_depth < 1) throw CliError("invalid value for --max-depth: must be >= 1");
  if (o.delta <= 0.0 || o.delta >= 1.0) {
    throw CliError("invalid value for --delta: must be in (0, 1)");
  }
  if (o.tau < 0.0) throw CliError("invalid value for --tau: must be >= 0");
  if (o.epsilon_s <= 0.0 || o.epsilon_s > 1.0) {
    throw CliError("invalid value for --epsilon-s: must be in (0, 1]");
  }
  if (o.grace < 1) throw CliError("invalid value for --grace: must be >= 1");
  if (o.learning_rate <= 0.0) throw CliError("invalid value for --learning-rate: must be > 0");
  if (o.leaf_prediction != "mc" && o.leaf_prediction != "nba") {
    throw CliError("invalid value for --leaf-prediction: '" + o.leaf_prediction +
                   "' (expected mc|nba)");
  }
  if (o.node_limit < 0) throw CliError("invalid value for --node-limit: must be >= 0");
  if (!contains(kModelNames, o.pool_base) || o.pool_base == "pool") {
    throw CliError("invalid value for config key 'pool-base': '" + o.pool_base + "'");
  }
  if (o.out.empty()) throw CliError("invalid value for --out: must not be empty");
}

// --- stream construction ---

StreamSpec make_stream_spec(const CliOptions& o) {
  StreamSpec spec;
  if (o.stream == "sea") spec.kind = GeneratorKind::Sea;
  if (o.stream == "agrawal") spec.kind = GeneratorKind::Agrawal;
  if (o.stream == "hyperplane") spec.kind = GeneratorKind::Hyperplane;
  if (o.stream == "rbf") spec.kind = GeneratorKind::Rbf;
  if (o.stream == "csv") spec.kind = GeneratorKind::Csv;
  spec.n_instances = o.instances;
  spec.seed = o.seed;

  if (o.drift_kind == "abrupt") spec.drift.kind = DriftKind::Abrupt;
  if (o.drift_kind == "gradual") spec.drift.kind = DriftKind::Gradual;
  if (o.drift_kind == "perturbation") spec.drift.kind = DriftKind::Perturbation;
  if (o.drift_kind == "oversample") spec.drift.kind = DriftKind::Oversample;
  spec.drift.positions = parse_long_list(o.drift_at, "--drift-at");
  spec.drift.width = o.drift_width;
  spec.drift.magnitude = o.drift_width;  // perturbation reuses --drift-width
  spec.drift.oversample_fraction = o.oversample_fraction;

  spec.sea_noise = o.sea_noise;
  spec.sea_thresholds = parse_double_list(o.sea_thresholds, "config key 'sea-thresholds'");
  spec.agrawal_functions.clear();
  for (long f : parse_long_list(o.agrawal_functions, "config key 'agrawal-functions'")) {
    spec.agrawal_functions.push_back(static_cast<int>(f));
  }
  spec.hyp_magnitude = o.hyp_magnitude;
  spec.hyp_noise = o.hyp_noise;
  spec.hyp_flip_prob = o.hyp_flip_prob;
  spec.rbf_centroids = o.rbf_centroids;
  spec.rbf_features = o.rbf_features;
  spec.rbf_classes = o.rbf_classes;
  spec.rbf_speed = o.rbf_speed;
  spec.csv_path = o.csv;
  spec.label_column = o.label_column;
  spec.shuffle = !o.no_shuffle;
  return spec;
}

StreamFactory make_stream_factory(const CliOptions& o) {
  StreamSpec spec = make_stream_spec(o);
  std::shared_ptr<const CsvData> data;
  if (spec.kind == GeneratorKind::Csv) {
    data = std::make_shared<const CsvData>(load_csv(spec.csv_path, spec.label_column));
  }
  return [spec, data](unsigned long seed) {
    StreamSpec seeded = spec;
    seeded.seed = seed;
    return make_stream(seeded, data);
  };
}

// --- model construction ---

SoHoTConfig sohot_config(const CliOptions& o, int p, int k) {
  SoHoTConfig cfg;
  cfg.input_dim = p;
  cfg.class_count = k;
  cfg.alpha = o.alpha;
  cfg.gate.gamma = o.gamma;
  cfg.max_depth = o.max_depth;
  cfg.delta = o.delta;
  cfg.tau = o.tau;
  cfg.epsilon_s = o.epsilon_s;
  cfg.grace_period = o.grace;
  cfg.learning_rate = o.learning_rate;
  return cfg;
}

HoeffdingTreeConfig ht_config(const CliOptions& o, int p, int k, bool limited) {
  HoeffdingTreeConfig cfg;
  cfg.input_dim = p;
  cfg.class_count = k;
  cfg.leaf_prediction = o.leaf_prediction == "mc" ? LeafPrediction::MajorityClass
                                                  : LeafPrediction::NaiveBayesAdaptive;
  cfg.delta = o.delta;
  cfg.tau = o.tau;
  cfg.grace_period = o.grace;
  if (limited) {
    cfg.internal_node_limit = o.node_limit > 0 ? o.node_limit : 127;
  } else if (o.node_limit > 0) {
    cfg.internal_node_limit = o.node_limit;
  }
  return cfg;
}

SoftTreeConfig st_config(const CliOptions& o, int p, int k, unsigned long seed) {
  SoftTreeConfig cfg;
  cfg.input_dim = p;
  cfg.class_count = k;
  cfg.depth = o.max_depth;
  cfg.gate.gamma = o.gamma;
  cfg.learning_rate = o.learning_rate;
  cfg.seed = seed;
  return cfg;
}

std::vector<std::unique_ptr<StreamModel>> build_pool_members(const CliOptions& o, int p, int k,
                                                             unsigned long seed) {
  std::vector<std::unique_ptr<StreamModel>> members;
  auto member_seed = [&](std::size_t idx) {
    return seed + 1000003ul * static_cast<unsigned long>(idx + 1);
  };
  if (o.pool_base == "sohot") {
    for (int depth : {5, 6, 7}) {
      for (double gamma : {1.0, 0.1}) {
        for (double alpha : {0.2, 0.3, 0.4}) {
          SoHoTConfig cfg = sohot_config(o, p, k);
          cfg.max_depth = depth;
          cfg.gate.gamma = gamma;
          cfg.alpha = alpha;
          members.push_back(std::make_unique<SoHoTModel>(cfg));
        }
      }
    }
  } else if (o.pool_base == "ht" || o.pool_base == "ht-limit") {
    for (auto leaf : {LeafPrediction::MajorityClass, LeafPrediction::NaiveBayesAdaptive}) {
      for (double delta : {1e-6, 1e-7, 1e-8}) {
        for (long grace : {200L, 400L, 600L}) {
          HoeffdingTreeConfig cfg = ht_config(o, p, k, o.pool_base == "ht-limit");
          cfg.leaf_prediction = leaf;
          cfg.delta = delta;
          cfg.grace_period = grace;
          members.push_back(std::make_unique<HoeffdingTreeModel>(cfg));
        }
      }
    }
  } else {  // st
    for (int depth : {5, 6, 7}) {
      for (double gamma : {1.0, 0.1, 0.01}) {
        for (double lr : {1e-2, 1e-3}) {
          SoftTreeConfig cfg = st_config(o, p, k, member_seed(members.size()));
          cfg.depth = depth;
          cfg.gate.gamma = gamma;
          cfg.learning_rate = lr;
          members.push_back(std::make_unique<SoftTreeModel>(cfg));
        }
      }
    }
  }
  return members;
}

std::unique_ptr<StreamModel> make_single_model(const std::string& name, const CliOptions& o,
                                               int p, int k, unsigned long seed) {
  if (name == "sohot") return std::make_unique<SoHoTModel>(sohot_config(o, p, k));
  if (name == "ht") return std::make_unique<HoeffdingTreeModel>(ht_config(o, p, k, false));
  if (name == "ht-limit") return std::make_unique<HoeffdingTreeModel>(ht_config(o, p, k, true));
  if (name == "st") return std::make_unique<SoftTreeModel>(st_config(o, p, k, seed));
  if (name == "pool") return std::make_unique<ModelPool>(build_pool_members(o, p, k, seed));
  throw CliError("invalid value for --model: '" + name + "'");
}

ModelFactory make_model_factory(const std::string& name, const CliOptions& o, int p, int k) {
  return [name, o, p, k](unsigned long seed) { return make_single_model(name, o, p, k, seed); };
}

// --- output rendering ---

std::string out_stem(const std::string& path) {
  const auto slash = path.find_last_of('/');
  const auto dot = path.find_last_of('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return path;
  return path.substr(0, dot);
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream outstream(path, std::ios::binary);
  if (!outstream) throw CliError("cannot write output file: " + path);
  outstream << content;
  outstream.flush();
  if (!outstream.good()) throw CliError("failed writing output file: " + path);
}

std::string render_report_csv(const EvalReport& report) {
  std::ostringstream os;
  os << "instances,ce_loss,auroc,node_count,grad_norm,transparency_ratio\n";
  for (const auto& w : report.windows) {
    os << w.instances << ',' << fmt(w.ce) << ",," << fmt(w.node_count) << ','
       << fmt(w.grad_norm) << ',' << fmt(w.transparency) << '\n';
  }
  os << report.n_instances << ',' << fmt(report.ce_mean) << ',' << fmt(report.auroc_mean) << ','
     << fmt(report.node_count_mean) << ',' << fmt(report.grad_norm_mean) << ','
     << fmt(report.transparency_mean) << '\n';
  return os.str();
}

std::string render_reps_csv(const EvalReport& report) {
  std::ostringstream os;
  os << "rep,ce_loss,auroc,node_count,transparency_ratio\n";
  for (std::size_t r = 0; r < report.reps.size(); ++r) {
    const auto& rep = report.reps[r];
    os << r << ',' << fmt(rep.mean_ce) << ',' << fmt(rep.auroc) << ',' << rep.final_node_count
       << ',' << fmt(rep.transparency_ratio) << '\n';
  }
  return os.str();
}

std::string render_config_echo(const CliOptions& o, const std::string& command) {
  std::ostringstream os;
  os << "# resolved configuration (reusable via --config)\n";
  os << "# command: " << command << '\n';
  for (const auto& binding : key_bindings()) {
    os << binding.key << " = " << binding.get(o) << '\n';
  }
  return os.str();
}

std::string render_plot_dat(const EvalReport& report) {
  std::ostringstream os;
  os << "# instances ce_loss node_count grad_norm transparency_ratio\n";
  for (const auto& w : report.windows) {
    os << w.instances << ' ' << fmt(w.ce) << ' ' << fmt(w.node_count) << ' ' << fmt(w.grad_norm)
       << ' ' << (w.transparency ? fmt(*w.transparency) : "nan") << '\n';
  }
  return os.str();
}

std::string render_plot_script(const std::string& dat_path, const std::string& title) {
  std::ostringstream os;
  os << "# gnuplot script: loss, tree growth and gradient norm over the stream\n"
     << "set terminal pngcairo size 900,900\n"
     << "set output '" << out_stem(dat_path) << ".png'\n"
     << "set multiplot layout 3,1 title '" << title << "'\n"
     << "set xlabel 'instances'\n"
     << "set ylabel 'cross-entropy'\n"
     << "plot '" << dat_path << "' using 1:2 with lines notitle\n"
     << "set ylabel 'node count'\n"
     << "plot '" << dat_path << "' using 1:3 with lines notitle\n"
     << "set ylabel '|dL/dT|'\n"
     << "plot '" << dat_path << "' using 1:4 with lines notitle\n"
     << "unset multiplot\n";
  return os.str();
}

std::string command_line(int argc, const char* const* argv) {
  std::string cmd;
  for (int i = 0; i < argc; ++i) {
    if (i) cmd += ' ';
    cmd += argv[i];
  }
  return cmd;
}

PrequentialConfig prequential_config(const CliOptions& o) {
  PrequentialConfig cfg;
  cfg.n_instances = o.instances;
  cfg.window = o.window;
  cfg.repetitions = o.reps;
  cfg.base_seed = o.seed;
  cfg.track_transparency = true;
  cfg.threads = o.threads;
  return cfg;
}

// --- commands ---

/// Materializes derived defaults so the config echo reflects the run exactly.
CliOptions resolve(CliOptions o) {
  if (o.model == "ht-limit" && o.node_limit == 0) o.node_limit = 127;
  return o;
}

int cmd_run(const CliOptions& options_in, const std::string& command) {
  const CliOptions o = resolve(options_in);
  validate(o);
  auto stream_factory = make_stream_factory(o);
  auto probe = stream_factory(o.seed);
  const int p = probe->feature_count();
  const int k = probe->class_count();
  probe.reset();
  auto model_factory = make_model_factory(o.model, o, p, k);

  std::string tree_dump;
  RepetitionHook hook = nullptr;
  if (!o.dump_tree.empty()) {
    hook = [&tree_dump](int rep, StreamModel& model) {
      if (rep != 0) return;
      std::ostringstream os;
      model.dump(os);
      tree_dump = os.str();
    };
  }

  EvalReport report =
      prequential_run(model_factory, stream_factory, prequential_config(o), hook);
  if (report.truncated) {
    std::cerr << "warning: stream exhausted after " << report.n_instances
              << " instances; report is partial\n";
  }

  write_file(o.out, render_report_csv(report));
  const std::string stem = out_stem(o.out);
  write_file(stem + "_reps.csv", render_reps_csv(report));
  write_file(stem + ".config", render_config_echo(o, command));
  if (!o.dump_tree.empty()) write_file(o.dump_tree, tree_dump);
  if (o.plot) {
    write_file(stem + ".dat", render_plot_dat(report));
    write_file(stem + ".gp", render_plot_script(stem + ".dat", o.model + " on " + o.stream));
  }
  return 0;
}

int cmd_compare(const CliOptions& options_in, const std::string& command) {
  const CliOptions o = resolve(options_in);
  validate(o);
  const std::vector<std::string> names = split_list(o.models);
  if (names.size() < 2) throw CliError("--models needs at least two entries");
  for (const auto& name : names) {
    if (!contains(kModelNames, name)) {
      throw CliError("invalid value for --models: '" + name + "' (expected " +
                     joined(kModelNames) + ")");
    }
  }

  auto stream_factory = make_stream_factory(o);
  auto probe = stream_factory(o.seed);
  const int p = probe->feature_count();
  const int k = probe->class_count();
  probe.reset();

  std::vector<EvalReport> reports;
  for (const auto& name : names) {
    reports.push_back(prequential_run(make_model_factory(name, o, p, k), stream_factory,
                                      prequential_config(o)));
  }

  double best_ce = std::numeric_limits<double>::infinity();
  double best_auroc = -std::numeric_limits<double>::infinity();
  for (const auto& r : reports) {
    best_ce = std::min(best_ce, r.ce_mean);
    if (r.auroc_mean) best_auroc = std::max(best_auroc, *r.auroc_mean);
  }

  std::ostringstream os;
  os << "model,ce_loss,ce_loss_se,auroc,auroc_se,ce_winner,auroc_winner\n";
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto& r = reports[i];
    const bool ce_win = r.ce_mean == best_ce;
    const bool auroc_win = r.auroc_mean && *r.auroc_mean == best_auroc;
    os << names[i] << ',' << fmt(r.ce_mean) << ',' << fmt(r.ce_se) << ',' << fmt(r.auroc_mean)
       << ',' << fmt(r.auroc_se) << ',' << (ce_win ? 1 : 0) << ',' << (auroc_win ? 1 : 0)
       << '\n';
  }
  write_file(o.out, os.str());

  std::ostringstream reps;
  reps << "model,rep,ce_loss,auroc\n";
  for (std::size_t i = 0; i < names.size(); ++i) {
    for (std::size_t r = 0; r < reports[i].reps.size(); ++r) {
      reps << names[i] << ',' << r << ',' << fmt(reports[i].reps[r].mean_ce) << ','
           << fmt(reports[i].reps[r].auroc) << '\n';
    }
  }
  const std::string stem = out_stem(o.out);
  write_file(stem + "_reps.csv", reps.str());
  write_file(stem + ".config", render_config_echo(o, command));
  return 0;
}

int cmd_transparency(const CliOptions& options_in, const std::string& command) {
  const CliOptions o = resolve(options_in);
  validate(o);
  if (o.model != "sohot" && o.model != "st") {
    throw CliError("invalid value for --model: transparency sweeps support sohot|st");
  }
  std::vector<double> grid = o.model == "st" ? std::vector<double>{1.0}
                                             : parse_double_list(o.alpha_grid, "--alpha-grid");
  if (grid.empty()) throw CliError("--alpha-grid must not be empty");
  for (double a : grid) {
    if (a < 0.0 || a > 1.0) throw CliError("invalid value for --alpha-grid: must be in [0, 1]");
  }

  auto stream_factory = make_stream_factory(o);
  auto probe = stream_factory(o.seed);
  const int p = probe->feature_count();
  const int k = probe->class_count();
  probe.reset();

  std::ostringstream os;
  os << "alpha,transparency_ratio,auroc\n";
  for (double alpha : grid) {
    CliOptions swept = o;
    swept.alpha = alpha;
    EvalReport report = prequential_run(make_model_factory(o.model, swept, p, k),
                                        stream_factory, prequential_config(o));
    os << fmt(alpha) << ',' << fmt(report.transparency_mean) << ',' << fmt(report.auroc_mean)
       << '\n';
  }
  write_file(o.out, os.str());
  write_file(out_stem(o.out) + ".config", render_config_echo(o, command));
  return 0;
}

void add_shared_options(CLI::App* cmd, CliOptions& o) {
  cmd->add_option("--config", o.config_file, "flat key = value config file");
  cmd->add_option("--model", o.model, "model: sohot|ht|ht-limit|st|pool");
  cmd->add_option("--stream", o.stream, "stream: sea|agrawal|hyperplane|rbf|csv");
  cmd->add_option("--csv", o.csv, "CSV file path for --stream csv");
  cmd->add_option("--label-column", o.label_column, "label column name or index");
  cmd->add_option("--instances", o.instances, "instances per repetition");
  cmd->add_option("--window", o.window, "metric window size");
  cmd->add_option("--reps", o.reps, "repetitions (seeds seed..seed+reps-1)");
  cmd->add_option("--seed", o.seed, "base seed");
  cmd->add_option("--alpha", o.alpha, "gate/split-test blend in [0,1]");
  cmd->add_option("--gamma", o.gamma, "smooth-step width");
  cmd->add_option("--max-depth", o.max_depth, "maximum tree depth (st: fixed depth)");
  cmd->add_option("--delta", o.delta, "Hoeffding significance level");
  cmd->add_option("--tau", o.tau, "tie-break threshold");
  cmd->add_option("--epsilon-s", o.epsilon_s, "reach-probability cutoff for leaf statistics");
  cmd->add_option("--grace", o.grace, "grace period between split attempts");
  cmd->add_option("--learning-rate", o.learning_rate, "Adam learning rate");
  cmd->add_option("--leaf-prediction", o.leaf_prediction, "ht leaves: mc|nba");
  cmd->add_option("--node-limit", o.node_limit, "internal node cap (ht-limit default 127)");
  cmd->add_option("--drift-kind", o.drift_kind, "none|abrupt|gradual|perturbation|oversample");
  cmd->add_option("--drift-at", o.drift_at, "comma-separated drift positions");
  cmd->add_option("--drift-width", o.drift_width,
                  "gradual ramp length in instances; perturbation magnitude");
  cmd->add_option("--out", o.out, "report CSV path");
  cmd->add_option("--dump-tree", o.dump_tree, "write a tree text dump to this path");
  cmd->add_flag("--plot", o.plot, "emit gnuplot data + script next to the report");
  cmd->add_flag("--no-shuffle", o.no_shuffle, "keep CSV rows in file order");
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CliOptions options;

  CLI::App app{"Streaming soft Hoeffding trees: train, compare and inspect tree models on "
               "drifting data streams"};
  app.require_subcommand(1);

  CLI::App* run = app.add_subcommand("run", "prequential run of one model on one stream");
  add_shared_options(run, options);

  CLI::App* compare =
      app.add_subcommand("compare", "run several models on identically seeded streams");
  add_shared_options(compare, options);
  compare->add_option("--models", options.models, "comma-separated model list");

  CLI::App* transparency =
      app.add_subcommand("transparency", "sweep alpha and report transparency vs AUROC");
  add_shared_options(transparency, options);
  transparency->add_option("--alpha-grid", options.alpha_grid, "comma-separated alpha values");

  // flags override config-file keys override built-in defaults: find --config
  // first, apply the file, then let CLI11 overwrite from the command line
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--config") {
      try {
        apply_config_file(options, argv[i + 1]);
      } catch (const CliError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
      }
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  const std::string command = command_line(argc, argv);
  try {
    if (run->parsed()) return cmd_run(options, command);
    if (compare->parsed()) return cmd_compare(options, command);
    if (transparency->parsed()) return cmd_transparency(options, command);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace sohot::cli
