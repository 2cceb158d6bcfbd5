#include "qhsvm/feature_select.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "qhsvm/errors.hpp"

namespace qhsvm {

namespace {

std::vector<std::size_t> class_counts(std::span<const ClassLabel> y,
                                      std::span<const std::size_t> rows, std::size_t classes) {
  std::vector<std::size_t> counts(classes, 0);
  for (std::size_t r : rows) ++counts[y[r]];
  return counts;
}

struct SplitChoice {
  std::size_t feature = 0;
  double threshold = 0.0;
  double decrease = -1.0;
  double left_impurity = 0.0;
  double right_impurity = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, std::span<const ClassLabel> y, const TreeConfig& config)
      : x_(x), y_(y), config_(config) {
    classes_ = y.empty() ? 1 : static_cast<std::size_t>(*std::ranges::max_element(y)) + 1;
    classes_ = std::max<std::size_t>(classes_, 2);
  }

  std::unique_ptr<TreeNode> build(std::vector<std::size_t> rows, std::size_t depth) {
    auto node = std::make_unique<TreeNode>();
    const auto counts = class_counts(y_, rows, classes_);
    node->num_samples = rows.size();
    node->impurity = gini_from_counts(counts);
    node->predicted_class = static_cast<ClassLabel>(
        std::ranges::max_element(counts) - counts.begin());

    const bool depth_left = !config_.max_depth || depth < *config_.max_depth;
    if (node->impurity == 0.0 || rows.size() < config_.min_samples_split || !depth_left) {
      return node;
    }
    const auto best = best_split(rows, counts, node->impurity);
    if (!best) return node;

    std::vector<std::size_t> left_rows;
    std::vector<std::size_t> right_rows;
    for (std::size_t r : rows) {
      (x_(r, best->feature) <= best->threshold ? left_rows : right_rows).push_back(r);
    }
    node->feature_index = best->feature;
    node->threshold = best->threshold;
    node->left = build(std::move(left_rows), depth + 1);
    node->right = build(std::move(right_rows), depth + 1);
    return node;
  }

 private:
  std::optional<SplitChoice> best_split(const std::vector<std::size_t>& rows,
                                        const std::vector<std::size_t>& counts,
                                        double parent_impurity) const {
    std::optional<SplitChoice> best;
    std::vector<std::size_t> sorted(rows);
    std::vector<std::size_t> left(classes_);
    std::vector<std::size_t> right(classes_);
    const std::size_t n = rows.size();

    for (std::size_t f = 0; f < x_.cols(); ++f) {
      std::ranges::sort(sorted, [&](std::size_t a, std::size_t b) {
        const double va = x_(a, f);
        const double vb = x_(b, f);
        return va < vb || (va == vb && a < b);
      });
      std::ranges::fill(left, 0);
      right = counts;
      for (std::size_t k = 0; k + 1 < n; ++k) {
        const ClassLabel c = y_[sorted[k]];
        ++left[c];
        --right[c];
        const double here = x_(sorted[k], f);
        const double next = x_(sorted[k + 1], f);
        if (!(here < next)) continue;
        const std::size_t nl = k + 1;
        const double il = gini_from_counts(left);
        const double ir = gini_from_counts(right);
        const double decrease = impurity_decrease(parent_impurity, n, il, nl, ir, n - nl);
        // Strict comparison keeps the lowest feature and lowest threshold on ties.
        if (!best || decrease > best->decrease) {
          double threshold = here + (next - here) / 2.0;
          if (!(threshold < next)) threshold = here;
          best = SplitChoice{f, threshold, decrease, il, ir};
        }
      }
    }
    return best;
  }

  const Matrix& x_;
  std::span<const ClassLabel> y_;
  TreeConfig config_;
  std::size_t classes_ = 2;
};

void dump_node(const TreeNode& node, int depth, std::string& out) {
  char buf[160];
  out.append(static_cast<std::size_t>(depth) * 2, ' ');
  if (node.is_leaf()) {
    std::snprintf(buf, sizeof buf, "leaf class=%u | gini=%.17g n=%zu\n",
                  static_cast<unsigned>(node.predicted_class), node.impurity, node.num_samples);
    out += buf;
    return;
  }
  std::snprintf(buf, sizeof buf, "f%zu <= %.17g | gini=%.17g n=%zu\n", *node.feature_index,
                node.threshold, node.impurity, node.num_samples);
  out += buf;
  dump_node(*node.left, depth + 1, out);
  dump_node(*node.right, depth + 1, out);
}

void accumulate(const TreeNode& node, double root_n, std::vector<double>& scores) {
  if (node.is_leaf()) return;
  const double weight = static_cast<double>(node.num_samples) / root_n;
  scores[*node.feature_index] += weight * impurity_decrease(node, *node.left, *node.right);
  accumulate(*node.left, root_n, scores);
  accumulate(*node.right, root_n, scores);
}

}  // namespace

double gini_from_counts(std::span<const std::size_t> counts) {
  const std::size_t total = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  if (total == 0) throw ArgumentError("gini impurity of an empty node");
  double sum_sq = 0.0;
  for (std::size_t c : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(total);
    sum_sq += p * p;
  }
  return 1.0 - sum_sq;
}

double gini(std::span<const ClassLabel> labels) {
  if (labels.empty()) throw ArgumentError("gini impurity of an empty node");
  std::vector<std::size_t> counts(static_cast<std::size_t>(*std::ranges::max_element(labels)) + 1);
  for (ClassLabel c : labels) ++counts[c];
  return gini_from_counts(counts);
}

double impurity_decrease(double parent_impurity, std::size_t parent_n, double left_impurity,
                         std::size_t left_n, double right_impurity, std::size_t right_n) {
  if (left_n + right_n != parent_n || parent_n == 0) {
    throw StructureError("child sample counts " + std::to_string(left_n) + " + " +
                         std::to_string(right_n) + " do not match parent " +
                         std::to_string(parent_n));
  }
  const double n0 = static_cast<double>(parent_n);
  return parent_impurity - (static_cast<double>(left_n) / n0 * left_impurity +
                            static_cast<double>(right_n) / n0 * right_impurity);
}

double impurity_decrease(const TreeNode& parent, const TreeNode& left, const TreeNode& right) {
  return impurity_decrease(parent.impurity, parent.num_samples, left.impurity, left.num_samples,
                           right.impurity, right.num_samples);
}

std::unique_ptr<TreeNode> fit_tree(const Matrix& x, std::span<const ClassLabel> y,
                                   const TreeConfig& config) {
  if (x.rows() != y.size()) {
    throw ShapeError("feature matrix has " + std::to_string(x.rows()) + " rows but " +
                     std::to_string(y.size()) + " labels were given");
  }
  if (y.empty()) throw ArgumentError("cannot fit a tree on zero samples");
  for (double v : x.data()) {
    if (!std::isfinite(v)) throw DataError("tree input contains a non-finite value");
  }
  std::vector<std::size_t> rows(y.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return TreeBuilder(x, y, config).build(std::move(rows), 0);
}

std::string dump_tree(const TreeNode& root) {
  std::string out;
  dump_node(root, 0, out);
  return out;
}

FeatureRanking rank_features(const TreeNode& root, std::size_t num_features) {
  FeatureRanking ranking;
  ranking.scores.assign(num_features, 0.0);
  accumulate(root, static_cast<double>(root.num_samples), ranking.scores);
  for (auto& s : ranking.scores) s = std::max(s, 0.0);
  const double total = std::accumulate(ranking.scores.begin(), ranking.scores.end(), 0.0);
  if (total > 0.0) {
    for (auto& s : ranking.scores) s /= total;
  }
  ranking.order.resize(num_features);
  std::iota(ranking.order.begin(), ranking.order.end(), std::size_t{0});
  std::ranges::stable_sort(ranking.order, [&](std::size_t a, std::size_t b) {
    return ranking.scores[a] > ranking.scores[b];
  });
  return ranking;
}

std::vector<std::size_t> select_top_k(FeatureRanking& ranking, std::size_t k) {
  if (k < 1 || k > ranking.order.size()) {
    throw ArgumentError("k = " + std::to_string(k) + " outside [1, " +
                        std::to_string(ranking.order.size()) + "]");
  }
  ranking.selected.assign(ranking.order.begin(),
                          ranking.order.begin() + static_cast<std::ptrdiff_t>(k));
  return ranking.selected;
}

}  // namespace qhsvm
