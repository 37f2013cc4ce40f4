#include "klsh/infotheory.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <unordered_map>

namespace klsh {

double entropy(std::span<const std::uint64_t> counts) {
  std::vector<std::uint64_t> sorted;
  sorted.reserve(counts.size());
  std::uint64_t total = 0;
  for (auto c : counts) {
    if (c == 0) continue;
    sorted.push_back(c);
    total += c;
  }
  if (total == 0) throw ValidationError("entropy of all-zero counts");
  std::sort(sorted.begin(), sorted.end());
  const double t = static_cast<double>(total);
  double h = 0.0;
  for (auto c : sorted) {
    const double p = static_cast<double>(c) / t;
    h -= p * std::log2(p);
  }
  return h;
}

JointCounts::JointCounts(std::size_t r, std::size_t c, std::vector<std::uint64_t> v)
    : rows(r), cols(c), cells(std::move(v)) {
  if (cells.size() != r * c) throw ValidationError("joint counts shape mismatch");
}

std::uint64_t JointCounts::total() const {
  return std::accumulate(cells.begin(), cells.end(), std::uint64_t{0});
}

std::vector<std::uint64_t> JointCounts::row_marginal() const {
  std::vector<std::uint64_t> m(rows, 0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) m[r] += at(r, c);
  return m;
}

std::vector<std::uint64_t> JointCounts::col_marginal() const {
  std::vector<std::uint64_t> m(cols, 0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) m[c] += at(r, c);
  return m;
}

double joint_entropy(const JointCounts& joint) {
  if (joint.total() == 0) throw ValidationError("empty joint counts");
  return entropy(joint.cells);
}

double mutual_information(const JointCounts& joint) {
  if (joint.total() == 0) throw ValidationError("empty joint counts");
  const double mi = entropy(joint.row_marginal()) + entropy(joint.col_marginal()) -
                    entropy(joint.cells);
  return std::max(0.0, mi);
}

double conditional_entropy(const JointCounts& joint) {
  if (joint.total() == 0) throw ValidationError("empty joint counts");
  return std::max(0.0, entropy(joint.cells) - entropy(joint.row_marginal()));
}

JointCounts binary_joint(const BitVector& a, const BitVector& b) {
  if (a.size() != b.size()) throw ValidationError("bit vector length mismatch");
  const auto n = static_cast<std::uint64_t>(a.size());
  const auto ca = static_cast<std::uint64_t>(a.count());
  const auto cb = static_cast<std::uint64_t>(b.count());
  const auto c11 = static_cast<std::uint64_t>(a.and_count(b));
  JointCounts j(2, 2);
  j.at(1, 1) = c11;
  j.at(1, 0) = ca - c11;
  j.at(0, 1) = cb - c11;
  j.at(0, 0) = n - ca - cb + c11;
  return j;
}

std::vector<std::uint32_t> prefix_cluster_ids(const HashcodeMatrix& codes, std::size_t ncols) {
  ncols = std::min(ncols, codes.cols());
  std::vector<std::uint32_t> ids(codes.rows(), 0);
  std::map<std::vector<bool>, std::uint32_t> seen;
  std::vector<bool> pattern(ncols);
  for (std::size_t i = 0; i < codes.rows(); ++i) {
    for (std::size_t l = 0; l < ncols; ++l) pattern[l] = codes.bit(i, l);
    auto [it, inserted] = seen.emplace(pattern, static_cast<std::uint32_t>(seen.size()));
    ids[i] = it->second;
  }
  return ids;
}

JointCounts category_joint(std::span<const std::uint32_t> categories, const BitVector& bits) {
  if (categories.size() != bits.size()) throw ValidationError("category/bit length mismatch");
  std::uint32_t k = 0;
  for (auto c : categories) k = std::max(k, c + 1);
  JointCounts j(k, 2);
  for (std::size_t i = 0; i < categories.size(); ++i) ++j.at(categories[i], bits.get(i) ? 1 : 0);
  return j;
}

const char* to_string(RedundancyMode m) {
  switch (m) {
    case RedundancyMode::MaxPairwise: return "max_pairwise";
    case RedundancyMode::MeanPairwise: return "mean_pairwise";
    case RedundancyMode::Cluster: return "cluster";
  }
  return "?";
}

RedundancyMode redundancy_mode_from_string(const std::string& s) {
  if (s == "max_pairwise") return RedundancyMode::MaxPairwise;
  if (s == "mean_pairwise") return RedundancyMode::MeanPairwise;
  if (s == "cluster") return RedundancyMode::Cluster;
  throw ValidationError("redundancy_mode: unknown mode '" + s + "'");
}

double redundancy_score(const BitVector& candidate, const HashcodeMatrix& existing,
                        RedundancyMode mode, std::size_t zeta) {
  if (candidate.size() != existing.rows())
    throw ValidationError("candidate length does not match hashcode rows");
  if (existing.cols() == 0 || existing.rows() == 0) return 0.0;
  switch (mode) {
    case RedundancyMode::MaxPairwise: {
      double best = 0.0;
      for (const auto& col : existing.columns())
        best = std::max(best, mutual_information(binary_joint(candidate, col)));
      return best;
    }
    case RedundancyMode::MeanPairwise: {
      double sum = 0.0;
      for (const auto& col : existing.columns())
        sum += mutual_information(binary_joint(candidate, col));
      return sum / static_cast<double>(existing.cols());
    }
    case RedundancyMode::Cluster: {
      const auto ids = prefix_cluster_ids(existing, std::max<std::size_t>(zeta, 1));
      return mutual_information(category_joint(ids, candidate));
    }
  }
  return 0.0;
}

double label_term(std::span<const std::optional<int>> labels,
                  std::span<const std::uint32_t> cluster_labels, const BitVector& candidate) {
  if (labels.size() != candidate.size() || cluster_labels.size() != candidate.size())
    throw ValidationError("label term inputs have mismatched lengths");
  // Condition on the (cluster, c) cell; rows index cells, columns index y.
  std::unordered_map<std::uint64_t, std::size_t> cell_index;
  std::vector<std::uint64_t> counts;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!labels[i]) continue;
    const std::uint64_t key =
        (static_cast<std::uint64_t>(cluster_labels[i]) << 1) | (candidate.get(i) ? 1U : 0U);
    auto [it, inserted] = cell_index.emplace(key, cell_index.size());
    if (inserted) counts.resize(counts.size() + 2, 0);
    ++counts[it->second * 2 + static_cast<std::size_t>(*labels[i] != 0)];
  }
  if (counts.empty()) throw ValidationError("label term needs at least one labeled point");
  const std::size_t cells = counts.size() / 2;
  return -conditional_entropy(JointCounts(cells, 2, std::move(counts)));
}

}  // namespace klsh
