#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "klsh/core.hpp"

namespace klsh {

// Plug-in estimators over counts. All values are in bits. Terms are summed in
// sorted order, so every estimator is exactly invariant under relabeling of
// categories.

/// -sum p log2 p over nonzero cells. Throws on all-zero counts.
double entropy(std::span<const std::uint64_t> counts);

/// Counts over the product of two finite alphabets, row-major.
struct JointCounts {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint64_t> cells;

  JointCounts() = default;
  JointCounts(std::size_t r, std::size_t c) : rows(r), cols(c), cells(r * c, 0) {}
  JointCounts(std::size_t r, std::size_t c, std::vector<std::uint64_t> v);

  std::uint64_t& at(std::size_t r, std::size_t c) { return cells[r * cols + c]; }
  std::uint64_t at(std::size_t r, std::size_t c) const { return cells[r * cols + c]; }
  std::uint64_t total() const;
  std::vector<std::uint64_t> row_marginal() const;
  std::vector<std::uint64_t> col_marginal() const;
};

double joint_entropy(const JointCounts& joint);
/// H(rows) + H(cols) - H(joint), clamped to >= 0.
double mutual_information(const JointCounts& joint);
/// H(cols | rows) = H(joint) - H(rows).
double conditional_entropy(const JointCounts& joint);

/// 2x2 counts of (a, b) for two equal-length bit vectors; row = a, col = b.
JointCounts binary_joint(const BitVector& a, const BitVector& b);

/// Dense ids (0..k-1, by first appearance) of the patterns formed by the first
/// `ncols` columns of `codes`.
std::vector<std::uint32_t> prefix_cluster_ids(const HashcodeMatrix& codes, std::size_t ncols);

/// Counts of (category, bit) with one row per category id.
JointCounts category_joint(std::span<const std::uint32_t> categories, const BitVector& bits);

enum class RedundancyMode { MaxPairwise, MeanPairwise, Cluster };

const char* to_string(RedundancyMode m);
RedundancyMode redundancy_mode_from_string(const std::string& s);

/// Information a candidate bit shares with the existing hash bits.
/// MAX/MEAN_PAIRWISE aggregate I(c; c_j) over existing columns; CLUSTER uses
/// I(c; pattern of the first `zeta` columns). Zero columns gives 0.
double redundancy_score(const BitVector& candidate, const HashcodeMatrix& existing,
                        RedundancyMode mode, std::size_t zeta = 1);

/// -H(y | cluster, c) over the points whose label is present.
double label_term(std::span<const std::optional<int>> labels,
                  std::span<const std::uint32_t> cluster_labels, const BitVector& candidate);

}  // namespace klsh
