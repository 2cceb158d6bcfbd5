#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "qhsvm/data_io.hpp"
#include "qhsvm/ocsvm.hpp"

namespace qhsvm {

// Anomaly (stress) is the positive class.
struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const noexcept { return tp + fp + tn + fn; }
  friend bool operator==(const Confusion&, const Confusion&) = default;
};

// Metrics with a zero denominator are left empty.
struct ClassificationMetrics {
  Confusion confusion;
  std::optional<double> accuracy;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
};

Confusion confusion_matrix(std::span<const SampleLabel> truth,
                           std::span<const PredictedLabel> predicted);
ClassificationMetrics compute_metrics(const Confusion& confusion);

// Max and mean over the defined values; `undefined` counts the excluded ones.
struct Aggregate {
  std::optional<double> max;
  std::optional<double> avg;
  std::size_t defined = 0;
  std::size_t undefined = 0;
};

Aggregate aggregate(std::span<const std::optional<double>> values);

}  // namespace qhsvm
