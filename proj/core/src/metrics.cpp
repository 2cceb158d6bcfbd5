#include "qhsvm/metrics.hpp"

#include <algorithm>

#include "qhsvm/errors.hpp"

namespace qhsvm {

Confusion confusion_matrix(std::span<const SampleLabel> truth,
                           std::span<const PredictedLabel> predicted) {
  if (truth.size() != predicted.size()) {
    throw ShapeError("got " + std::to_string(predicted.size()) + " predictions for " +
                     std::to_string(truth.size()) + " labels");
  }
  Confusion c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool actual = truth[i] == SampleLabel::Stress;
    const bool flagged = predicted[i] == PredictedLabel::Anomaly;
    if (actual && flagged) ++c.tp;
    else if (!actual && flagged) ++c.fp;
    else if (!actual && !flagged) ++c.tn;
    else ++c.fn;
  }
  return c;
}

ClassificationMetrics compute_metrics(const Confusion& c) {
  ClassificationMetrics m;
  m.confusion = c;
  const auto ratio = [](std::size_t num, std::size_t den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  m.accuracy = ratio(c.tp + c.tn, c.total());
  m.precision = ratio(c.tp, c.tp + c.fp);
  m.recall = ratio(c.tp, c.tp + c.fn);
  if (m.precision && m.recall && *m.precision + *m.recall > 0.0) {
    m.f1 = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
  }
  return m;
}

Aggregate aggregate(std::span<const std::optional<double>> values) {
  Aggregate a;
  double sum = 0.0;
  for (const auto& v : values) {
    if (!v) {
      ++a.undefined;
      continue;
    }
    ++a.defined;
    sum += *v;
    a.max = a.max ? std::max(*a.max, *v) : *v;
  }
  if (a.defined > 0) a.avg = sum / static_cast<double>(a.defined);
  return a;
}

}  // namespace qhsvm
