#include "qhsvm/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "qhsvm/errors.hpp"
#include "qhsvm/rng.hpp"

namespace qhsvm {

namespace {

using Json = nlohmann::ordered_json;

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string exact(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw FormatError("write to " + path.string() + " failed");
}

std::optional<std::string> read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json aggregate_json(const Aggregate& a) {
  return Json{{"max", optional_number(a.max)},
              {"avg", optional_number(a.avg)},
              {"defined", a.defined},
              {"undefined", a.undefined}};
}

std::vector<ClassTag> class_tags(const std::vector<SampleLabel>& labels) {
  std::vector<ClassTag> tags;
  tags.reserve(labels.size());
  for (auto l : labels) tags.push_back(l == SampleLabel::Stress ? ClassTag::Anomaly : ClassTag::Baseline);
  return tags;
}

void write_projection(const Projection2D& projection, const std::filesystem::path& path) {
  std::string text = "u,v,label\n";
  for (std::size_t i = 0; i < projection.points.size(); ++i) {
    text += exact(projection.points[i][0]) + "," + exact(projection.points[i][1]) + "," +
            (projection.labels[i] == ClassTag::Anomaly ? "anomaly" : "baseline") + "\n";
  }
  write_text(path, text);
}

std::string cache_key(const PreparedTrial& prepared, const Provenance& provenance,
                      const RunConfig& config, const std::string& dataset) {
  std::ostringstream key;
  key << "qhsvm-kernel-cache/1\n"
      << "dataset=" << dataset << "\n"
      << "features=" << prepared.selected.size() << "\n"
      << "trial_seed=" << prepared.seed << "\n"
      << "n_train=" << config.n_train << " n_test=" << config.n_test << "\n"
      << "tree_max_depth=" << (config.tree.max_depth ? std::to_string(*config.tree.max_depth) : "none")
      << " min_samples_split=" << config.tree.min_samples_split << "\n"
      << "feature_map=dense_angle linear_chain pad=0\n"
      << "kernel=" << provenance.describe() << "\n";
  return key.str();
}

std::string format_percent(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.1f%%", 100.0 * *v);
  return buf;
}

std::string format_ratio(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.3f", *v);
  return buf;
}

}  // namespace

std::string kernel_mode_name(KernelMode mode) {
  switch (mode) {
    case KernelMode::QuantumExact:
      return "qexact";
    case KernelMode::QuantumSampled:
      return "qsampled";
    case KernelMode::ClassicalLinear:
      return "linear";
    case KernelMode::ClassicalRbf:
      return "rbf";
  }
  return "?";
}

KernelMode parse_kernel_mode(const std::string& name) {
  if (name == "qexact") return KernelMode::QuantumExact;
  if (name == "qsampled") return KernelMode::QuantumSampled;
  if (name == "linear") return KernelMode::ClassicalLinear;
  if (name == "rbf") return KernelMode::ClassicalRbf;
  throw ArgumentError("unknown kernel '" + name + "' (expected qexact, qsampled, linear, rbf)");
}

bool MetricsReport::all_trials_failed() const {
  for (const auto& run : runs) {
    for (const auto& t : run.trials) {
      if (!t.error) return false;
    }
  }
  return true;
}

DatasetTable load_dataset(const RunConfig& config, std::ostream* log) {
  if (!config.data.empty()) {
    auto table = load_csv(config.data, config.csv);
    if (log) {
      for (const auto& r : table.rejected) {
        *log << "warning: " << config.data.string() << " line " << r.line << ", column '"
             << r.column << "': " << r.reason << "; row skipped\n";
      }
    }
    return table;
  }
  if (config.synthetic) return generate_synthetic(*config.synthetic);
  throw ArgumentError("no dataset: pass --data or a synthetic configuration");
}

std::string dataset_key(const RunConfig& config) {
  if (!config.data.empty()) {
    const auto bytes = read_text(config.data);
    if (!bytes) throw FormatError("cannot open " + config.data.string());
    std::string mapping;
    for (const auto& b : config.csv.labels.baseline) mapping += b + ";";
    mapping += "|";
    for (const auto& s : config.csv.labels.stress) mapping += s + ";";
    return "csv:" + hex64(fnv1a(*bytes)) + " label=" + config.csv.label_column +
           " map=" + mapping;
  }
  if (!config.synthetic) throw ArgumentError("no dataset configured");
  const auto& s = *config.synthetic;
  std::ostringstream key;
  key << "synthetic:" << (s.kind == SyntheticKind::TwoGaussians ? "two_gaussians" : "planted")
      << " dims=" << s.dims << " n_per_class=" << s.n_per_class
      << " separation=" << exact(s.separation) << " planted_k=" << s.planted_k
      << " sigma=" << exact(s.sigma) << " seed=" << s.seed;
  return key.str();
}

std::uint64_t trial_seed(std::uint64_t base_seed, std::size_t trial) {
  return derive_seed(base_seed, 0x747269616cULL, trial);
}

PreparedTrial prepare_trial(const DatasetTable& table, const RunConfig& config, std::size_t k,
                            std::size_t trial) {
  if (k < 1 || k > table.num_features()) {
    throw ArgumentError("requested " + std::to_string(k) + " features, dataset has " +
                        std::to_string(table.num_features()));
  }
  PreparedTrial p;
  p.trial = trial;
  p.seed = trial_seed(config.seed, trial);
  p.split = split(table, SplitSpec{config.n_train, config.n_test, 0.5, p.seed});

  const auto encoding = fit_categorical(p.split.train);
  const auto train = apply_categorical(encoding, p.split.train);
  const auto test = apply_categorical(encoding, p.split.test);

  // Tree sees every labelled row that is not in the test set.
  std::vector<bool> in_test(table.size(), false);
  for (std::size_t i : p.split.test_indices) in_test[i] = true;
  std::vector<std::size_t> tree_rows;
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (!in_test[i]) tree_rows.push_back(i);
  }
  const auto tree_table = apply_categorical(encoding, table.subset(tree_rows));
  std::vector<ClassLabel> tree_labels;
  tree_labels.reserve(tree_table.size());
  for (auto l : tree_table.labels) tree_labels.push_back(static_cast<ClassLabel>(l));
  const auto tree = fit_tree(tree_table.rows, tree_labels, config.tree);
  p.ranking = rank_features(*tree, table.num_features());
  p.selected = select_top_k(p.ranking, k);

  const auto train_k = train.rows.select_cols(p.selected);
  const auto test_k = test.rows.select_cols(p.selected);
  const auto scaling = fit_scaling(train_k);
  p.train = apply_scaling(scaling, train_k);
  p.test = apply_scaling(scaling, test_k);
  return p;
}

std::unique_ptr<Kernel> make_kernel(KernelMode mode, const RunConfig& config, std::size_t k,
                                    std::uint64_t seed) {
  const auto spec = [k] { return FeatureMapSpec::dense(static_cast<int>(k)); };
  switch (mode) {
    case KernelMode::QuantumExact:
      return std::make_unique<QuantumExactKernel>(spec());
    case KernelMode::QuantumSampled:
      return std::make_unique<QuantumSampledKernel>(spec(), config.shots, seed);
    case KernelMode::ClassicalLinear:
      return std::make_unique<LinearKernel>();
    case KernelMode::ClassicalRbf:
      return std::make_unique<RbfKernel>(config.gamma.value_or(1.0 / static_cast<double>(k)));
  }
  throw ArgumentError("unknown kernel mode");
}

KernelPair compute_kernels(const PreparedTrial& prepared, KernelMode mode, const RunConfig& config,
                           const std::string& dataset, std::ostream& log) {
  const auto kernel = make_kernel(mode, config, prepared.selected.size(), prepared.seed);
  const auto key = cache_key(prepared, kernel->provenance(), config, dataset);
  std::filesystem::path train_path;
  std::filesystem::path test_path;
  std::filesystem::path meta_path;

  if (!config.cache_dir.empty()) {
    std::filesystem::create_directories(config.cache_dir);
    const auto stem = hex64(fnv1a(key));
    train_path = config.cache_dir / (stem + ".train.qkrn");
    test_path = config.cache_dir / (stem + ".test.qkrn");
    meta_path = config.cache_dir / (stem + ".meta");
    const auto meta = read_text(meta_path);
    if (meta && *meta == key) {
      try {
        const auto start = std::chrono::steady_clock::now();
        KernelPair pair{load_kernel(train_path), load_kernel(test_path), true, 0.0};
        pair.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (pair.train.provenance == kernel->provenance() &&
            pair.train.rows() == prepared.train.rows() &&
            pair.test.rows() == prepared.test.rows()) {
          return pair;
        }
        log << "notice: cache entry " << stem << " does not match this run; recomputing\n";
      } catch (const Error& e) {
        log << "notice: unreadable cache entry " << stem << " (" << e.what() << "); recomputing\n";
      }
    } else if (meta) {
      log << "notice: cache entry " << stem << " has a different configuration hash; recomputing\n";
    }
  }

  const auto start = std::chrono::steady_clock::now();
  const FillOptions fill{config.workers};
  KernelPair pair{gram_train(*kernel, prepared.train, fill),
                  gram_test(*kernel, prepared.test, prepared.train, fill), false, 0.0};
  pair.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (!config.cache_dir.empty()) {
    save_kernel(pair.train, train_path);
    save_kernel(pair.test, test_path);
    write_text(meta_path, key);
  }
  return pair;
}

std::string cmd_select(const RunConfig& config, std::ostream* log) {
  const auto table = load_dataset(config, log);
  for (std::size_t k : config.features) {
    if (k < 1 || k > table.num_features()) {
      throw ArgumentError("requested " + std::to_string(k) + " features, dataset has " +
                          std::to_string(table.num_features()));
    }
  }
  std::vector<ClassLabel> labels;
  labels.reserve(table.size());
  for (auto l : table.labels) labels.push_back(static_cast<ClassLabel>(l));
  const auto tree = fit_tree(table.rows, labels, config.tree);
  auto ranking = rank_features(*tree, table.num_features());

  Json selected = Json::object();
  for (std::size_t k : config.features) selected[std::to_string(k)] = select_top_k(ranking, k);
  Json scores = Json::array();
  for (std::size_t f = 0; f < table.num_features(); ++f) {
    scores.push_back(Json{{"index", f}, {"name", table.feature_names[f]}, {"score", ranking.scores[f]}});
  }
  const Json doc{{"schema", "qhsvm.ranking.v1"},
                 {"dataset", dataset_key(config)},
                 {"samples", table.size()},
                 {"order", ranking.order},
                 {"scores", scores},
                 {"selected", selected}};

  std::ostringstream text;
  text << "rank  index  score                feature\n";
  const std::size_t shown = *std::ranges::max_element(config.features);
  for (std::size_t r = 0; r < shown; ++r) {
    const std::size_t f = ranking.order[r];
    char line[160];
    std::snprintf(line, sizeof line, "%4zu  %5zu  %-19.17g  %s\n", r + 1, f, ranking.scores[f],
                  table.feature_names[f].c_str());
    text << line;
  }

  std::filesystem::create_directories(config.out_dir);
  write_text(config.out_dir / "ranking.json", doc.dump(2) + "\n");
  write_text(config.out_dir / "ranking.txt", text.str() + "\ntree:\n" + dump_tree(*tree));
  return text.str();
}

void cmd_kernel(const RunConfig& config, std::ostream& log) {
  RunConfig cfg = config;
  if (cfg.cache_dir.empty()) cfg.cache_dir = cfg.out_dir / "cache";
  const auto table = load_dataset(cfg, &log);
  const auto dataset = dataset_key(cfg);
  for (std::size_t k : cfg.features) {
    const auto prepared = prepare_trial(table, cfg, k, 1);
    for (KernelMode mode : cfg.kernels) {
      const auto pair = compute_kernels(prepared, mode, cfg, dataset, log);
      log << kernel_mode_name(mode) << " k=" << k << ": train " << pair.train.rows() << "x"
          << pair.train.cols() << ", test " << pair.test.rows() << "x" << pair.test.cols() << ", "
          << (pair.from_cache ? "loaded from cache" : "computed") << " in " << std::fixed
          << std::setprecision(3) << pair.seconds << " s with " << cfg.workers << " worker"
          << (cfg.workers == 1 ? "" : "s") << " [" << pair.train.provenance.describe() << "]\n";
      log.unsetf(std::ios::floatfield);
    }
  }
}

MetricsReport cmd_run(const RunConfig& config, std::ostream& log) {
  if (config.trials < 1) throw ArgumentError("trials must be >= 1");
  const auto table = load_dataset(config, &log);
  for (std::size_t k : config.features) {
    if (k < 1 || k > table.num_features()) {
      throw ArgumentError("requested " + std::to_string(k) + " features, dataset has " +
                          std::to_string(table.num_features()));
    }
  }
  const auto dataset = dataset_key(config);
  std::filesystem::create_directories(config.out_dir);

  MetricsReport report;
  for (std::size_t k : config.features) {
    const std::size_t first_run = report.runs.size();
    for (KernelMode mode : config.kernels) report.runs.push_back({mode, k, {}, {}, {}, {}, {}});

    for (std::size_t t = 1; t <= config.trials; ++t) {
      std::optional<PreparedTrial> prepared;
      std::optional<std::string> prepare_error;
      try {
        prepared = prepare_trial(table, config, k, t);
      } catch (const Error& e) {
        prepare_error = e.what();
      }

      for (std::size_t m = 0; m < config.kernels.size(); ++m) {
        const KernelMode mode = config.kernels[m];
        TrialOutcome outcome;
        outcome.trial = t;
        outcome.seed = trial_seed(config.seed, t);
        if (!prepared) {
          outcome.error = prepare_error;
        } else {
          outcome.selected = prepared->selected;
          try {
            const auto kernels = compute_kernels(*prepared, mode, config, dataset, log);
            const auto model =
                fit(mode == KernelMode::QuantumSampled ? clip_to_psd(kernels.train) : kernels.train,
                    OcsvmConfig{config.nu});
            const auto predictions = predict(model, kernels.test);
            std::vector<PredictedLabel> labels;
            labels.reserve(predictions.size());
            for (const auto& p : predictions) labels.push_back(p.label);
            outcome.metrics =
                compute_metrics(confusion_matrix(prepared->split.test.labels, labels));
            outcome.support_vectors = model.support_indices.size();
            outcome.rho = model.rho;
            try {
              const auto projection = kernel_pca_2d(kernels.test, kernels.train,
                                                    class_tags(prepared->split.test.labels));
              write_projection(projection, config.out_dir / ("projection_" + kernel_mode_name(mode) +
                                                             "_k" + std::to_string(k) + "_trial" +
                                                             std::to_string(t) + ".csv"));
            } catch (const Error& e) {
              outcome.projection_error = e.what();
            }
          } catch (const Error& e) {
            outcome.error = e.what();
          }
        }

        log << kernel_mode_name(mode) << " k=" << k << " trial " << t << ": ";
        if (outcome.error) {
          log << "failed: " << *outcome.error << "\n";
        } else {
          const auto& mm = *outcome.metrics;
          log << "acc " << format_percent(mm.accuracy) << " prec " << format_percent(mm.precision)
              << " rec " << format_percent(mm.recall) << " f1 " << format_ratio(mm.f1) << "\n";
        }
        report.runs[first_run + m].trials.push_back(std::move(outcome));
      }
    }
  }

  for (auto& run : report.runs) {
    std::vector<std::optional<double>> acc, prec, rec, f1;
    for (const auto& t : run.trials) {
      if (!t.metrics) continue;
      acc.push_back(t.metrics->accuracy);
      prec.push_back(t.metrics->precision);
      rec.push_back(t.metrics->recall);
      f1.push_back(t.metrics->f1);
    }
    run.accuracy = aggregate(acc);
    run.precision = aggregate(prec);
    run.recall = aggregate(rec);
    run.f1 = aggregate(f1);
  }

  write_text(config.out_dir / "report.json", report_json(report, config));
  log << "\n" << report_table(report);
  return report;
}

void cmd_synth(const RunConfig& config, const std::filesystem::path& path) {
  if (!config.synthetic) throw ArgumentError("synth needs synthetic parameters");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  write_csv(generate_synthetic(*config.synthetic), path, config.csv.label_column);
}

std::string report_json(const MetricsReport& report, const RunConfig& config) {
  Json kernels = Json::array();
  for (auto m : config.kernels) kernels.push_back(kernel_mode_name(m));
  const Json cfg{{"dataset", dataset_key(config)},
                 {"features", config.features},
                 {"kernels", kernels},
                 {"nu", config.nu},
                 {"trials", config.trials},
                 {"seed", config.seed},
                 {"n_train", config.n_train},
                 {"n_test", config.n_test},
                 {"shots", config.shots},
                 {"gamma", optional_number(config.gamma)}};

  Json runs = Json::array();
  for (const auto& run : report.runs) {
    Json trials = Json::array();
    for (const auto& t : run.trials) {
      Json entry{{"trial", t.trial}, {"seed", t.seed}, {"selected", t.selected}};
      if (t.metrics) {
        const auto& c = t.metrics->confusion;
        entry["confusion"] = Json{{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}};
        entry["accuracy"] = optional_number(t.metrics->accuracy);
        entry["precision"] = optional_number(t.metrics->precision);
        entry["recall"] = optional_number(t.metrics->recall);
        entry["f1"] = optional_number(t.metrics->f1);
        entry["support_vectors"] = t.support_vectors;
        entry["rho"] = t.rho;
      }
      entry["error"] = t.error ? Json(*t.error) : Json(nullptr);
      entry["projection_error"] = t.projection_error ? Json(*t.projection_error) : Json(nullptr);
      trials.push_back(std::move(entry));
    }
    const bool quantum = run.kernel == KernelMode::QuantumExact ||
                         run.kernel == KernelMode::QuantumSampled;
    runs.push_back(Json{{"kernel", kernel_mode_name(run.kernel)},
                        {"features", run.features},
                        {"qubits", quantum ? Json((run.features + 1) / 2) : Json(nullptr)},
                        {"trials", trials},
                        {"aggregate",
                         Json{{"accuracy", aggregate_json(run.accuracy)},
                              {"precision", aggregate_json(run.precision)},
                              {"recall", aggregate_json(run.recall)},
                              {"f1", aggregate_json(run.f1)}}}});
  }
  return Json{{"schema", "qhsvm.report.v1"}, {"config", cfg}, {"runs", runs}}.dump(2) + "\n";
}

std::string report_table(const MetricsReport& report) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-9s %-14s %-22s %-22s %-22s %-20s\n", "Method", "Features",
                "Accuracy", "Precision", "Recall", "F1");
  os << line;
  for (const auto& run : report.runs) {
    const bool quantum = run.kernel == KernelMode::QuantumExact ||
                         run.kernel == KernelMode::QuantumSampled;
    const std::string features =
        std::to_string(run.features) +
        (quantum ? " (" + std::to_string((run.features + 1) / 2) + "-qubit)" : "");
    auto cell = [](const Aggregate& a, bool ratio) {
      return "max " + (ratio ? format_ratio(a.max) : format_percent(a.max)) + " avg " +
             (ratio ? format_ratio(a.avg) : format_percent(a.avg));
    };
    std::snprintf(line, sizeof line, "%-9s %-14s %-22s %-22s %-22s %-20s\n",
                  kernel_mode_name(run.kernel).c_str(), features.c_str(),
                  cell(run.accuracy, false).c_str(), cell(run.precision, false).c_str(),
                  cell(run.recall, false).c_str(), cell(run.f1, true).c_str());
    os << line;
  }
  return os.str();
}

}  // namespace qhsvm
