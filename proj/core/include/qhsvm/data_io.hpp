#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "qhsvm/matrix.hpp"

namespace qhsvm {

enum class SampleLabel : std::uint8_t { Baseline = 0, Stress = 1 };

// Raw levels of a categorical column, kept so encodings can be refitted on a
// training subset after splitting.
struct CategoricalColumn {
  std::size_t column = 0;
  std::vector<std::string> levels;  // one per row
};

struct RejectedRow {
  std::size_t line = 0;  // 1-based line in the file, header is line 1
  std::string column;
  std::string reason;
};

struct DatasetTable {
  std::vector<std::string> feature_names;
  Matrix rows;
  std::vector<SampleLabel> labels;
  std::string source;
  std::vector<CategoricalColumn> categorical;
  std::vector<RejectedRow> rejected;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t num_features() const noexcept { return feature_names.size(); }
  std::size_t count(SampleLabel label) const;

  // Rows at the given indices, in order, with categorical levels carried along.
  DatasetTable subset(std::span<const std::size_t> indices) const;
  // Keeps only the given feature columns, in order.
  DatasetTable select_features(std::span<const std::size_t> columns) const;
};

enum class CategoricalPolicy { FrequencyEncode, Reject };

// Label values are matched case-insensitively after trimming.
struct LabelMapping {
  std::vector<std::string> baseline{"0", "baseline", "normal"};
  std::vector<std::string> stress{"1", "stress", "anomaly"};
};

struct CsvOptions {
  std::string label_column = "label";
  CategoricalPolicy categorical = CategoricalPolicy::FrequencyEncode;
  LabelMapping labels;
};

// Comma-separated, header row first, '.' decimals. A column with any
// non-numeric cell is categorical and is replaced by each level's relative
// frequency. Rows with empty, non-finite or unmapped cells are skipped and
// listed in `rejected`. Throws FormatError for a missing header or label
// column and DataError when no rows survive.
DatasetTable load_csv(const std::filesystem::path& path, const CsvOptions& options = {});
DatasetTable parse_csv(std::istream& in, const CsvOptions& options, const std::string& source);

void write_csv(const DatasetTable& table, const std::filesystem::path& path,
               const std::string& label_column = "label");

// Per categorical column: level -> relative frequency in the fitted rows.
struct CategoricalEncoding {
  std::map<std::size_t, std::map<std::string, double>> frequencies;
};

CategoricalEncoding fit_categorical(const DatasetTable& train);
// Re-encodes categorical columns; levels absent from the encoding map to 0.
DatasetTable apply_categorical(const CategoricalEncoding& encoding, DatasetTable table);

// Min-max statistics of the training rows; values map to [0, pi].
struct ScalingParams {
  std::vector<double> min;
  std::vector<double> max;
};

ScalingParams fit_scaling(const Matrix& train);
ScalingParams fit_scaling(const DatasetTable& train);
// pi (x - min) / (max - min), clamped to [0, pi]; constant features map to pi/2.
Matrix apply_scaling(const ScalingParams& params, const Matrix& rows);
DatasetTable apply_scaling(const ScalingParams& params, DatasetTable table);

struct SplitSpec {
  std::size_t n_train = 2000;
  std::size_t n_test = 1500;
  double test_balance = 0.5;
  std::uint64_t seed = 0;
};

struct Split {
  DatasetTable train;  // baseline rows only
  DatasetTable test;   // balanced baseline/stress
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
};

// Seeded sampling without replacement. Index lists are sorted ascending.
// Throws ArgumentError when the balance cannot be met exactly and
// CapacityError when a class has too few rows.
Split split(const DatasetTable& table, const SplitSpec& spec);

enum class SyntheticKind { TwoGaussians, PlantedFeatures };

struct SyntheticParams {
  SyntheticKind kind = SyntheticKind::TwoGaussians;
  std::size_t dims = 8;
  std::size_t n_per_class = 500;
  // TwoGaussians: distance between class means in units of sigma.
  // PlantedFeatures: per-feature mean shift between classes, in sigma.
  double separation = 6.0;
  std::size_t planted_k = 8;
  double sigma = 1.0;
  std::uint64_t seed = 0;
};

// TwoGaussians: baseline ~ N(0, sigma^2 I), stress ~ N(mu, sigma^2 I) with
// mu along the all-ones direction. PlantedFeatures: planted_k columns carry
// a class-dependent mean shift (named "inf_<i>"), the rest are i.i.d. noise
// ("noise_<i>"). Rows are baseline first, then stress.
DatasetTable generate_synthetic(const SyntheticParams& params);

// Column indices of the informative features for PlantedFeatures, ascending.
std::vector<std::size_t> planted_feature_indices(const SyntheticParams& params);

}  // namespace qhsvm
