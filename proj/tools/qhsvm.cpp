// qhsvm: command-line driver for the quantum-kernel one-class SVM pipeline.
//
//   qhsvm synth  --kind two-gaussians --dims 8 --out data.csv
//   qhsvm select --data data.csv --features 8,12
//   qhsvm kernel --data data.csv --features 8 --kernel qexact --cache-dir cache
//   qhsvm run    --data data.csv --features 8,12 --kernel qexact,rbf --trials 10
//
// Exit codes: 0 success, 1 runtime failure, 2 data error, 64 usage error.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "qhsvm/errors.hpp"
#include "qhsvm/pipeline.hpp"

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitData = 2;
constexpr int kExitUsage = 64;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Settings = std::map<std::string, std::string>;

std::string normalize_key(std::string key) {
  for (auto& c : key) {
    if (c == '_') c = '-';
  }
  return key;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  return s.substr(first, s.find_last_not_of(" \t\r\n") - first + 1);
}

// key=value lines; '#' starts a comment. Entries override command-line flags.
void apply_config_file(const std::string& path, Settings& settings) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(path + ":" + std::to_string(line_no) + ": expected key=value");
    }
    settings[normalize_key(trim(line.substr(0, eq)))] = trim(line.substr(eq + 1));
  }
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T parse_value(const std::string& key, const std::string& text) {
  std::istringstream in(text);
  T value{};
  in >> value;
  if (!in || !(in >> std::ws).eof()) {
    throw UsageError("invalid value '" + text + "' for " + key);
  }
  return value;
}

qhsvm::RunConfig build_config(const Settings& s) {
  qhsvm::RunConfig config;
  const auto get = [&s](const std::string& key) -> const std::string* {
    const auto it = s.find(key);
    return it == s.end() ? nullptr : &it->second;
  };

  if (const auto* v = get("data")) config.data = *v;
  if (const auto* v = get("label-col")) config.csv.label_column = *v;
  if (const auto* v = get("baseline-labels")) config.csv.labels.baseline = split_list(*v);
  if (const auto* v = get("stress-labels")) config.csv.labels.stress = split_list(*v);
  if (const auto* v = get("features")) {
    config.features.clear();
    for (const auto& item : split_list(*v)) {
      const auto k = parse_value<long long>("--features", item);
      if (k < 1) throw UsageError("--features values must be >= 1");
      config.features.push_back(static_cast<std::size_t>(k));
    }
    if (config.features.empty()) throw UsageError("--features is empty");
  }
  if (const auto* v = get("kernel")) {
    config.kernels.clear();
    for (const auto& item : split_list(*v)) {
      try {
        config.kernels.push_back(qhsvm::parse_kernel_mode(item));
      } catch (const qhsvm::ArgumentError& e) {
        throw UsageError(e.what());
      }
    }
    if (config.kernels.empty()) throw UsageError("--kernel is empty");
  }
  if (const auto* v = get("shots")) config.shots = parse_value<std::uint64_t>("--shots", *v);
  if (const auto* v = get("gamma")) config.gamma = parse_value<double>("--gamma", *v);
  if (const auto* v = get("nu")) config.nu = parse_value<double>("--nu", *v);
  if (const auto* v = get("trials")) config.trials = parse_value<std::size_t>("--trials", *v);
  if (const auto* v = get("seed")) config.seed = parse_value<std::uint64_t>("--seed", *v);
  if (const auto* v = get("n-train")) config.n_train = parse_value<std::size_t>("--n-train", *v);
  if (const auto* v = get("n-test")) config.n_test = parse_value<std::size_t>("--n-test", *v);
  if (const auto* v = get("max-depth")) {
    config.tree.max_depth = parse_value<std::size_t>("--max-depth", *v);
  }
  if (const auto* v = get("min-samples-split")) {
    config.tree.min_samples_split = parse_value<std::size_t>("--min-samples-split", *v);
  }
  if (const auto* v = get("cache-dir")) config.cache_dir = *v;
  if (const auto* v = get("out-dir")) config.out_dir = *v;

  if (const auto* v = get("workers")) {
    config.workers = parse_value<unsigned>("--workers", *v);
  } else if (const char* env = std::getenv("QHSVM_WORKERS")) {
    config.workers = parse_value<unsigned>("QHSVM_WORKERS", env);
  }
  if (config.workers == 0) throw UsageError("worker count must be >= 1");
  if (!(config.nu > 0.0 && config.nu <= 1.0)) throw UsageError("--nu must lie in (0, 1]");
  if (config.trials == 0) throw UsageError("--trials must be >= 1");
  if (config.shots == 0) throw UsageError("--shots must be >= 1");
  if (config.n_test % 2 != 0) throw UsageError("--n-test must be even for a balanced test set");

  if (const auto* kind = get("kind")) {
    qhsvm::SyntheticParams p;
    if (*kind == "two-gaussians") {
      p.kind = qhsvm::SyntheticKind::TwoGaussians;
      p.separation = 6.0;
    } else if (*kind == "planted") {
      p.kind = qhsvm::SyntheticKind::PlantedFeatures;
      p.dims = 60;
      p.separation = 1.0;
    } else {
      throw UsageError("--kind must be two-gaussians or planted");
    }
    if (const auto* v = get("dims")) p.dims = parse_value<std::size_t>("--dims", *v);
    if (const auto* v = get("n-per-class")) {
      p.n_per_class = parse_value<std::size_t>("--n-per-class", *v);
    }
    if (const auto* v = get("separation")) p.separation = parse_value<double>("--separation", *v);
    if (const auto* v = get("planted-k")) p.planted_k = parse_value<std::size_t>("--planted-k", *v);
    if (const auto* v = get("sigma")) p.sigma = parse_value<double>("--sigma", *v);
    p.seed = config.seed;
    if (const auto* v = get("data-seed")) p.seed = parse_value<std::uint64_t>("--data-seed", *v);
    config.synthetic = p;
  }
  return config;
}

void add_string(CLI::App* app, Settings& settings, const std::string& flag,
                const std::string& help) {
  const std::string key = flag.substr(2);
  app->add_option_function<std::string>(
      flag, [&settings, key](const std::string& v) { settings[key] = v; }, help);
}

void add_data_flags(CLI::App* app, Settings& s) {
  add_string(app, s, "--data", "input CSV (header row, one label column)");
  add_string(app, s, "--label-col", "label column name (default: label)");
  add_string(app, s, "--baseline-labels", "comma list of label values meaning baseline");
  add_string(app, s, "--stress-labels", "comma list of label values meaning stress");
  add_string(app, s, "--kind", "synthetic source instead of --data: two-gaussians | planted");
  add_string(app, s, "--dims", "synthetic feature count");
  add_string(app, s, "--n-per-class", "synthetic rows per class");
  add_string(app, s, "--separation", "synthetic class separation in sigma units");
  add_string(app, s, "--planted-k", "informative features for --kind planted");
  add_string(app, s, "--sigma", "synthetic noise scale");
  add_string(app, s, "--data-seed", "synthetic generator seed (default: --seed)");
  add_string(app, s, "--seed", "base seed");
  add_string(app, s, "--config", "key=value file; its entries override flags");
  add_string(app, s, "--out-dir", "output directory (default: out)");
}

void add_pipeline_flags(CLI::App* app, Settings& s) {
  add_string(app, s, "--features", "comma list of feature counts (default: 8,12)");
  add_string(app, s, "--max-depth", "decision tree depth limit");
  add_string(app, s, "--min-samples-split", "decision tree minimum node size to split");
  add_string(app, s, "--n-train", "baseline training rows per trial (default: 2000)");
  add_string(app, s, "--n-test", "balanced test rows per trial (default: 1500)");
}

void add_kernel_flags(CLI::App* app, Settings& s) {
  add_string(app, s, "--kernel", "comma list of qexact, qsampled, linear, rbf (default: qexact,rbf)");
  add_string(app, s, "--shots", "shots per pair for qsampled (default: 1024)");
  add_string(app, s, "--gamma", "RBF gamma (default: 1/features)");
  add_string(app, s, "--workers", "kernel worker threads (default: $QHSVM_WORKERS or 1)");
  add_string(app, s, "--cache-dir", "kernel cache directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum-kernel one-class SVM anomaly detection"};
  app.require_subcommand(1);
  Settings settings;

  auto* synth = app.add_subcommand("synth", "write a synthetic labelled CSV");
  add_data_flags(synth, settings);
  add_string(synth, settings, "--out", "output CSV path");

  auto* select = app.add_subcommand("select", "rank features by Gini importance");
  add_data_flags(select, settings);
  add_pipeline_flags(select, settings);

  auto* kernel = app.add_subcommand("kernel", "compute and cache train/test Gram matrices");
  add_data_flags(kernel, settings);
  add_pipeline_flags(kernel, settings);
  add_kernel_flags(kernel, settings);

  auto* run = app.add_subcommand("run", "full pipeline with multi-trial metrics");
  add_data_flags(run, settings);
  add_pipeline_flags(run, settings);
  add_kernel_flags(run, settings);
  add_string(run, settings, "--nu", "one-class SVM nu (default: 0.1)");
  add_string(run, settings, "--trials", "number of reseeded trials (default: 10)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (const auto it = settings.find("config"); it != settings.end()) {
      apply_config_file(it->second, settings);
    }
    const auto config = build_config(settings);
    if (config.data.empty() && !config.synthetic) {
      throw UsageError("no dataset: pass --data <csv> or --kind <synthetic kind>");
    }

    if (synth->parsed()) {
      const auto out = settings.find("out");
      if (out == settings.end()) throw UsageError("synth needs --out <file>");
      if (!config.synthetic) throw UsageError("synth needs --kind");
      qhsvm::cmd_synth(config, out->second);
      return 0;
    }
    if (select->parsed()) {
      std::cout << qhsvm::cmd_select(config, &std::cerr);
      return 0;
    }
    if (kernel->parsed()) {
      qhsvm::cmd_kernel(config, std::cout);
      return 0;
    }
    const auto report = qhsvm::cmd_run(config, std::cout);
    return report.all_trials_failed() ? kExitRuntime : 0;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const qhsvm::ArgumentError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const qhsvm::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const qhsvm::FormatError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const qhsvm::CapacityError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
