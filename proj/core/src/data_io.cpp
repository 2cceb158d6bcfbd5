#include "qhsvm/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>

#include "qhsvm/errors.hpp"
#include "qhsvm/rng.hpp"

namespace qhsvm {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::string lower(std::string s) {
  std::ranges::transform(s, s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::optional<double> parse_number(const std::string& cell) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = first + cell.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || first == last) return std::nullopt;
  return v;
}

std::optional<SampleLabel> map_label(const std::string& cell, const LabelMapping& mapping) {
  const auto key = lower(cell);
  for (const auto& b : mapping.baseline) {
    if (lower(b) == key) return SampleLabel::Baseline;
  }
  for (const auto& s : mapping.stress) {
    if (lower(s) == key) return SampleLabel::Stress;
  }
  return std::nullopt;
}

std::map<std::string, double> level_frequencies(const std::vector<std::string>& levels) {
  std::map<std::string, double> freq;
  for (const auto& level : levels) freq[level] += 1.0;
  for (auto& [level, count] : freq) count /= static_cast<double>(levels.size());
  return freq;
}

}  // namespace

std::size_t DatasetTable::count(SampleLabel label) const {
  return static_cast<std::size_t>(std::ranges::count(labels, label));
}

DatasetTable DatasetTable::subset(std::span<const std::size_t> indices) const {
  DatasetTable out;
  out.feature_names = feature_names;
  out.rows = rows.select_rows(indices);
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) out.labels.push_back(labels[i]);
  out.source = source;
  for (const auto& col : categorical) {
    CategoricalColumn sub{col.column, {}};
    sub.levels.reserve(indices.size());
    for (std::size_t i : indices) sub.levels.push_back(col.levels[i]);
    out.categorical.push_back(std::move(sub));
  }
  return out;
}

DatasetTable DatasetTable::select_features(std::span<const std::size_t> columns) const {
  DatasetTable out;
  for (std::size_t c : columns) {
    if (c >= feature_names.size()) {
      throw IndexError("feature index " + std::to_string(c) + " out of range");
    }
    out.feature_names.push_back(feature_names[c]);
  }
  out.rows = rows.select_cols(columns);
  out.labels = labels;
  out.source = source;
  for (std::size_t k = 0; k < columns.size(); ++k) {
    for (const auto& col : categorical) {
      if (col.column == columns[k]) out.categorical.push_back({k, col.levels});
    }
  }
  return out;
}

DatasetTable parse_csv(std::istream& in, const CsvOptions& options, const std::string& source) {
  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) {
    throw FormatError(source + ": missing header row");
  }
  const auto header = split_line(line);
  const auto label_it = std::ranges::find(header, options.label_column);
  if (label_it == header.end()) {
    throw FormatError(source + ": label column '" + options.label_column + "' not in header");
  }
  const auto label_col = static_cast<std::size_t>(label_it - header.begin());

  DatasetTable table;
  table.source = source;
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c == label_col) continue;
    feature_cols.push_back(c);
    table.feature_names.push_back(header[c]);
  }
  const std::size_t width = feature_cols.size();
  if (width == 0) throw FormatError(source + ": no feature columns");

  // First pass: structural and label checks, keep raw cells of candidate rows.
  std::vector<std::vector<std::string>> raw;
  std::vector<std::size_t> raw_lines;
  std::vector<SampleLabel> raw_labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != header.size()) {
      table.rejected.push_back({line_no, "", "expected " + std::to_string(header.size()) +
                                                  " cells, found " +
                                                  std::to_string(cells.size())});
      continue;
    }
    const auto label = map_label(cells[label_col], options.labels);
    if (!label) {
      table.rejected.push_back({line_no, options.label_column,
                                "unmapped label '" + cells[label_col] + "'"});
      continue;
    }
    raw.push_back(std::move(cells));
    raw_lines.push_back(line_no);
    raw_labels.push_back(*label);
  }

  // A column is categorical when any non-empty cell is not a number.
  std::vector<bool> is_categorical(width, false);
  for (std::size_t k = 0; k < width; ++k) {
    for (const auto& cells : raw) {
      const auto& cell = cells[feature_cols[k]];
      if (!cell.empty() && !parse_number(cell)) {
        is_categorical[k] = true;
        break;
      }
    }
    if (is_categorical[k] && options.categorical == CategoricalPolicy::Reject) {
      throw DataError(source + ": column '" + table.feature_names[k] +
                      "' is categorical and the policy rejects categorical columns");
    }
  }

  std::vector<double> values;
  std::vector<std::vector<std::string>> levels(width);
  for (std::size_t r = 0; r < raw.size(); ++r) {
    const auto& cells = raw[r];
    std::vector<double> row(width, 0.0);
    std::optional<RejectedRow> problem;
    for (std::size_t k = 0; k < width && !problem; ++k) {
      const auto& cell = cells[feature_cols[k]];
      if (cell.empty()) {
        problem = RejectedRow{raw_lines[r], table.feature_names[k], "missing value"};
      } else if (!is_categorical[k]) {
        const double v = *parse_number(cell);
        if (!std::isfinite(v)) {
          problem = RejectedRow{raw_lines[r], table.feature_names[k],
                                "non-finite value '" + cell + "'"};
        }
        row[k] = v;
      }
    }
    if (problem) {
      table.rejected.push_back(*problem);
      continue;
    }
    for (std::size_t k = 0; k < width; ++k) {
      if (is_categorical[k]) levels[k].push_back(cells[feature_cols[k]]);
    }
    values.insert(values.end(), row.begin(), row.end());
    table.labels.push_back(raw_labels[r]);
  }

  std::ranges::stable_sort(table.rejected, {}, &RejectedRow::line);
  if (table.labels.empty()) {
    throw DataError(source + ": all " + std::to_string(table.rejected.size()) +
                    " data rows were rejected");
  }
  table.rows = Matrix(table.labels.size(), width, std::move(values));
  for (std::size_t k = 0; k < width; ++k) {
    if (is_categorical[k]) table.categorical.push_back({k, std::move(levels[k])});
  }
  auto encoding = fit_categorical(table);
  return apply_categorical(encoding, std::move(table));
}

DatasetTable load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  return parse_csv(in, options, path.string());
}

void write_csv(const DatasetTable& table, const std::filesystem::path& path,
               const std::string& label_column) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  for (const auto& name : table.feature_names) out << name << ',';
  out << label_column << '\n';
  char buf[32];
  for (std::size_t r = 0; r < table.size(); ++r) {
    for (std::size_t c = 0; c < table.num_features(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", table.rows(r, c));
      out << buf << ',';
    }
    out << (table.labels[r] == SampleLabel::Baseline ? "baseline" : "stress") << '\n';
  }
  if (!out) throw FormatError("write to " + path.string() + " failed");
}

CategoricalEncoding fit_categorical(const DatasetTable& train) {
  CategoricalEncoding enc;
  for (const auto& col : train.categorical) enc.frequencies[col.column] = level_frequencies(col.levels);
  return enc;
}

DatasetTable apply_categorical(const CategoricalEncoding& encoding, DatasetTable table) {
  for (const auto& col : table.categorical) {
    const auto it = encoding.frequencies.find(col.column);
    for (std::size_t r = 0; r < col.levels.size(); ++r) {
      double v = 0.0;
      if (it != encoding.frequencies.end()) {
        const auto level = it->second.find(col.levels[r]);
        if (level != it->second.end()) v = level->second;
      }
      table.rows(r, col.column) = v;
    }
  }
  return table;
}

ScalingParams fit_scaling(const Matrix& train) {
  if (train.rows() == 0) throw ArgumentError("cannot fit scaling on zero rows");
  ScalingParams p;
  p.min.assign(train.cols(), 0.0);
  p.max.assign(train.cols(), 0.0);
  for (std::size_t c = 0; c < train.cols(); ++c) {
    p.min[c] = p.max[c] = train(0, c);
    for (std::size_t r = 1; r < train.rows(); ++r) {
      p.min[c] = std::min(p.min[c], train(r, c));
      p.max[c] = std::max(p.max[c], train(r, c));
    }
  }
  return p;
}

ScalingParams fit_scaling(const DatasetTable& train) { return fit_scaling(train.rows); }

Matrix apply_scaling(const ScalingParams& params, const Matrix& rows) {
  if (rows.cols() != params.min.size()) {
    throw ShapeError("scaling fitted on " + std::to_string(params.min.size()) +
                     " features, table has " + std::to_string(rows.cols()));
  }
  constexpr double pi = std::numbers::pi;
  Matrix out(rows.rows(), rows.cols());
  for (std::size_t c = 0; c < rows.cols(); ++c) {
    const double lo = params.min[c];
    const double span = params.max[c] - lo;
    for (std::size_t r = 0; r < rows.rows(); ++r) {
      if (span <= 0.0) {
        out(r, c) = pi / 2.0;
        continue;
      }
      out(r, c) = std::clamp(pi * (rows(r, c) - lo) / span, 0.0, pi);
    }
  }
  return out;
}

DatasetTable apply_scaling(const ScalingParams& params, DatasetTable table) {
  table.rows = apply_scaling(params, table.rows);
  return table;
}

Split split(const DatasetTable& table, const SplitSpec& spec) {
  const double test_baseline_exact = static_cast<double>(spec.n_test) * spec.test_balance;
  const auto n_test_baseline = static_cast<std::size_t>(std::llround(test_baseline_exact));
  if (spec.test_balance < 0.0 || spec.test_balance > 1.0 ||
      static_cast<double>(n_test_baseline) != test_baseline_exact) {
    throw ArgumentError("n_test = " + std::to_string(spec.n_test) +
                        " cannot be split with baseline fraction " +
                        std::to_string(spec.test_balance));
  }
  if (spec.n_train == 0) throw ArgumentError("n_train must be >= 1");
  const std::size_t n_test_stress = spec.n_test - n_test_baseline;

  std::vector<std::size_t> baseline;
  std::vector<std::size_t> stress;
  for (std::size_t i = 0; i < table.size(); ++i) {
    (table.labels[i] == SampleLabel::Baseline ? baseline : stress).push_back(i);
  }
  const std::size_t need_baseline = spec.n_train + n_test_baseline;
  if (baseline.size() < need_baseline || stress.size() < n_test_stress) {
    throw CapacityError("split needs " + std::to_string(need_baseline) + " baseline and " +
                        std::to_string(n_test_stress) + " stress rows; table has " +
                        std::to_string(baseline.size()) + " and " +
                        std::to_string(stress.size()));
  }

  // Partial Fisher-Yates: the first `take` entries become a uniform sample.
  Rng rng(spec.seed);
  auto sample = [&rng](std::vector<std::size_t>& pool, std::size_t take) {
    for (std::size_t k = 0; k < take; ++k) {
      const auto pick = k + static_cast<std::size_t>(rng.below(pool.size() - k));
      std::swap(pool[k], pool[pick]);
    }
  };
  sample(baseline, need_baseline);
  sample(stress, n_test_stress);

  Split out;
  out.train_indices.assign(baseline.begin(),
                           baseline.begin() + static_cast<std::ptrdiff_t>(spec.n_train));
  out.test_indices.assign(baseline.begin() + static_cast<std::ptrdiff_t>(spec.n_train),
                          baseline.begin() + static_cast<std::ptrdiff_t>(need_baseline));
  out.test_indices.insert(out.test_indices.end(), stress.begin(),
                          stress.begin() + static_cast<std::ptrdiff_t>(n_test_stress));
  std::ranges::sort(out.train_indices);
  std::ranges::sort(out.test_indices);
  out.train = table.subset(out.train_indices);
  out.test = table.subset(out.test_indices);
  return out;
}

std::vector<std::size_t> planted_feature_indices(const SyntheticParams& params) {
  if (params.planted_k > params.dims) {
    throw ArgumentError("planted_k exceeds dims");
  }
  std::vector<std::size_t> pool(params.dims);
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
  Rng rng(derive_seed(params.seed, 0x706c616e74ULL));
  for (std::size_t k = 0; k < params.planted_k; ++k) {
    const auto pick = k + static_cast<std::size_t>(rng.below(pool.size() - k));
    std::swap(pool[k], pool[pick]);
  }
  std::vector<std::size_t> planted(pool.begin(),
                                   pool.begin() + static_cast<std::ptrdiff_t>(params.planted_k));
  std::ranges::sort(planted);
  return planted;
}

DatasetTable generate_synthetic(const SyntheticParams& params) {
  if (params.dims == 0 || params.n_per_class == 0) {
    throw ArgumentError("synthetic data needs dims >= 1 and n_per_class >= 1");
  }
  if (!(params.sigma > 0.0) || !std::isfinite(params.sigma) || !std::isfinite(params.separation) ||
      params.separation < 0.0) {
    throw ArgumentError("synthetic data needs sigma > 0 and a finite separation >= 0");
  }

  DatasetTable table;
  const std::size_t n = 2 * params.n_per_class;
  table.rows = Matrix(n, params.dims);
  table.labels.assign(n, SampleLabel::Baseline);
  std::fill(table.labels.begin() + static_cast<std::ptrdiff_t>(params.n_per_class),
            table.labels.end(), SampleLabel::Stress);
  Rng rng(params.seed);

  if (params.kind == SyntheticKind::TwoGaussians) {
    table.source = "synthetic:two_gaussians";
    for (std::size_t c = 0; c < params.dims; ++c) table.feature_names.push_back("x" + std::to_string(c));
    const double shift =
        params.separation * params.sigma / std::sqrt(static_cast<double>(params.dims));
    for (std::size_t r = 0; r < n; ++r) {
      const double mean = table.labels[r] == SampleLabel::Stress ? shift : 0.0;
      for (std::size_t c = 0; c < params.dims; ++c) {
        table.rows(r, c) = mean + params.sigma * rng.normal();
      }
    }
    return table;
  }

  table.source = "synthetic:planted_features";
  const auto planted = planted_feature_indices(params);
  std::vector<bool> informative(params.dims, false);
  for (std::size_t p : planted) informative[p] = true;
  for (std::size_t c = 0; c < params.dims; ++c) {
    table.feature_names.push_back((informative[c] ? "inf_" : "noise_") + std::to_string(c));
  }
  const double half_shift = params.separation * params.sigma / 2.0;
  for (std::size_t r = 0; r < n; ++r) {
    const double sign = table.labels[r] == SampleLabel::Stress ? 1.0 : -1.0;
    for (std::size_t c = 0; c < params.dims; ++c) {
      const double mean = informative[c] ? sign * half_shift : 0.0;
      table.rows(r, c) = mean + params.sigma * rng.normal();
    }
  }
  return table;
}

}  // namespace qhsvm
