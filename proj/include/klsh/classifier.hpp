#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "klsh/common.hpp"

namespace klsh {

struct ForestConfig {
  int R = 100;
  int max_depth = 8;
  /// Fraction of features tried per node; 0 selects ceil(sqrt(H)) / H.
  double feature_subsample = 0.0;
  bool bootstrap = true;
  std::uint64_t seed = 13;

  void validate() const;
  friend bool operator==(const ForestConfig&, const ForestConfig&) = default;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  int left = -1;     // child for bit 0
  int right = -1;    // child for bit 1
  std::uint32_t count0 = 0;
  std::uint32_t count1 = 0;

  bool leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  int predict(const BitVector& code) const;
  friend bool operator==(const Tree&, const Tree&) = default;
};

struct Forest {
  std::vector<Tree> trees;
  std::size_t code_length = 0;
  friend bool operator==(const Forest&, const Forest&) = default;
};

/// CART on binary features with Gini impurity, one bootstrap sample and a
/// per-node random feature subset per tree. Throws on single-class data.
Forest train_forest(std::span<const BitVector> codes, std::span<const int> labels,
                    const ForestConfig& config);

/// Majority vote of the trees' leaf-majority predictions; ties -> 0.
std::vector<int> predict_forest(const Forest& forest, std::span<const BitVector> codes);

/// Majority label among the k nearest training codes by Hamming distance,
/// distance ties broken by lower training index. k must be odd.
int knn_hamming(std::span<const BitVector> train_codes, std::span<const int> train_labels,
                const BitVector& query, int k);

struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

/// Precision, recall and F1 for the positive class 1. A metric whose
/// denominator is zero is reported as 0.
Metrics evaluate(std::span<const int> predicted, std::span<const int> gold);

}  // namespace klsh
