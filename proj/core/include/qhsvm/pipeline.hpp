#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qhsvm/data_io.hpp"
#include "qhsvm/feature_select.hpp"
#include "qhsvm/kernel.hpp"
#include "qhsvm/metrics.hpp"
#include "qhsvm/ocsvm.hpp"

namespace qhsvm {

enum class KernelMode { QuantumExact, QuantumSampled, ClassicalLinear, ClassicalRbf };

// CLI spellings: qexact, qsampled, linear, rbf.
std::string kernel_mode_name(KernelMode mode);
KernelMode parse_kernel_mode(const std::string& name);

struct RunConfig {
  // Exactly one of `data` (CSV path) and `synthetic` is used; `data` wins.
  std::filesystem::path data;
  std::optional<SyntheticParams> synthetic;
  CsvOptions csv;

  std::vector<std::size_t> features{8, 12};
  std::vector<KernelMode> kernels{KernelMode::QuantumExact, KernelMode::ClassicalRbf};
  std::uint64_t shots = 1024;
  std::optional<double> gamma;  // RBF; 1/k when unset
  double nu = 0.1;
  std::size_t trials = 10;
  std::uint64_t seed = 0;
  std::size_t n_train = 2000;
  std::size_t n_test = 1500;
  TreeConfig tree;
  unsigned workers = 1;
  std::filesystem::path cache_dir;  // empty disables caching
  std::filesystem::path out_dir = "out";
};

// Loads the CSV or generates the synthetic table named by the config.
// Rejected CSV rows are reported to `log` when given.
DatasetTable load_dataset(const RunConfig& config, std::ostream* log = nullptr);

// Seed of trial t (1-based).
std::uint64_t trial_seed(std::uint64_t base_seed, std::size_t trial);

// Everything one trial needs before a kernel is chosen: the split, the
// selected features and the scaled train/test matrices.
struct PreparedTrial {
  std::size_t trial = 1;
  std::uint64_t seed = 0;
  Split split;
  FeatureRanking ranking;
  std::vector<std::size_t> selected;
  Matrix train;  // scaled to [0, pi], selected columns in ranking order
  Matrix test;
};

// split -> categorical refit on the training rows -> tree on every labelled
// row outside the test set -> top-k -> min-max scaling fitted on train.
PreparedTrial prepare_trial(const DatasetTable& table, const RunConfig& config, std::size_t k,
                            std::size_t trial);

std::unique_ptr<Kernel> make_kernel(KernelMode mode, const RunConfig& config, std::size_t k,
                                    std::uint64_t trial_seed);

struct KernelPair {
  KernelMatrix train;
  KernelMatrix test;
  bool from_cache = false;
  double seconds = 0.0;
};

// Computes both Gram matrices, reusing `config.cache_dir` when a cache entry
// for the same key exists. Mismatched or unreadable entries are recomputed
// with a notice on `log`.
KernelPair compute_kernels(const PreparedTrial& prepared, KernelMode mode, const RunConfig& config,
                           const std::string& dataset_key, std::ostream& log);

// Stable identity of the dataset: CSV bytes or synthetic parameters.
std::string dataset_key(const RunConfig& config);

struct TrialOutcome {
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> selected;
  std::optional<ClassificationMetrics> metrics;
  std::optional<std::string> error;
  std::optional<std::string> projection_error;
  std::size_t support_vectors = 0;
  double rho = 0.0;
};

struct RunSummary {
  KernelMode kernel = KernelMode::QuantumExact;
  std::size_t features = 0;
  std::vector<TrialOutcome> trials;
  Aggregate accuracy;
  Aggregate precision;
  Aggregate recall;
  Aggregate f1;
};

struct MetricsReport {
  std::vector<RunSummary> runs;

  bool all_trials_failed() const;
};

// Feature ranking over the whole labelled dataset. Writes ranking.json and
// ranking.txt (table plus tree dump) to out_dir and returns the text table.
std::string cmd_select(const RunConfig& config, std::ostream* log = nullptr);

// Computes and caches both Gram matrices for trial 1 of every
// (features, kernel) combination. Progress goes to `log`.
void cmd_kernel(const RunConfig& config, std::ostream& log);

// Full pipeline over every (features, kernel) combination and trial. Writes
// report.json and projection CSVs to out_dir; prints the table to `log`.
MetricsReport cmd_run(const RunConfig& config, std::ostream& log);

// Writes the configured synthetic dataset to `path`.
void cmd_synth(const RunConfig& config, const std::filesystem::path& path);

// Machine-readable report (schema "qhsvm.report.v1"); byte-stable for
// identical inputs.
std::string report_json(const MetricsReport& report, const RunConfig& config);
// Human-readable Max/Avg table.
std::string report_table(const MetricsReport& report);

}  // namespace qhsvm
