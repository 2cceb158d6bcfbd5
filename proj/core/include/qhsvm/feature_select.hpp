#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qhsvm/matrix.hpp"

namespace qhsvm {

// Class index per sample. Feature selection only sees binary targets
// (0 = baseline, 1 = stress) but the impurity helpers accept any count.
using ClassLabel = std::uint8_t;

// 1 - sum_c p_c^2 over the label multiset. Throws ArgumentError when empty.
double gini(std::span<const ClassLabel> labels);
// Same, from per-class counts.
double gini_from_counts(std::span<const std::size_t> counts);

struct TreeNode {
  std::optional<std::size_t> feature_index;  // absent on leaves
  double threshold = 0.0;                    // left branch takes value <= threshold
  double impurity = 0.0;
  std::size_t num_samples = 0;
  ClassLabel predicted_class = 0;
  std::unique_ptr<TreeNode> left;
  std::unique_ptr<TreeNode> right;

  bool is_leaf() const noexcept { return !feature_index; }
};

// Weighted impurity decrease I0 - (Nl/N0 Il + Nr/N0 Ir). Throws
// StructureError when child counts do not add up to the parent's.
double impurity_decrease(const TreeNode& parent, const TreeNode& left, const TreeNode& right);
double impurity_decrease(double parent_impurity, std::size_t parent_n, double left_impurity,
                         std::size_t left_n, double right_impurity, std::size_t right_n);

struct TreeConfig {
  std::optional<std::size_t> max_depth;  // unlimited when empty
  std::size_t min_samples_split = 2;
};

// Greedy CART with Gini impurity. Candidate thresholds are midpoints between
// consecutive distinct sorted values; ties resolve to the lowest feature
// index, then the lowest threshold. Nodes split while impure and a candidate
// exists, even when the best decrease is zero.
std::unique_ptr<TreeNode> fit_tree(const Matrix& x, std::span<const ClassLabel> y,
                                   const TreeConfig& config = {});

// One line per node, two spaces of indent per depth level:
//   f<idx> <= <threshold> | gini=<g> n=<count>
//   leaf class=<c> | gini=<g> n=<count>
// Numbers are printed with 17 significant digits.
std::string dump_tree(const TreeNode& root);

struct FeatureRanking {
  std::vector<double> scores;       // normalized to sum 1 when any split exists
  std::vector<std::size_t> order;   // descending score, ascending index on ties
  std::vector<std::size_t> selected;
};

// Per-feature sum of (N_node / N_root) * decrease over internal nodes.
FeatureRanking rank_features(const TreeNode& root, std::size_t num_features);

// First k entries of ranking.order; also stored in ranking.selected.
// Throws ArgumentError unless 1 <= k <= num_features.
std::vector<std::size_t> select_top_k(FeatureRanking& ranking, std::size_t k);

}  // namespace qhsvm
