#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "klsh/core.hpp"

namespace klsh {

struct Cluster {
  std::string id;  // the zeta-bit pattern, "0"/"1" per bit
  std::vector<std::size_t> members;
  std::size_t train_count = 0;
  std::size_t test_count = 0;
  double x_entropy = 0.0;  // entropy of (train_count, test_count), bits

  std::size_t size() const { return members.size(); }
};

/// Partition of the points by the pattern of their first zeta hash bits.
struct ClusterTable {
  std::vector<Cluster> clusters;         // ordered by id
  std::vector<std::uint32_t> assignment;  // point index -> cluster index

  std::size_t find(const std::string& id) const;  // npos when absent
};

/// Groups points by their first `zeta` bits. `test_indicator` has bit i set for
/// TEST points. Throws when the matrix has fewer than zeta columns.
ClusterTable assign_clusters(const HashcodeMatrix& matrix, std::size_t zeta,
                             const BitVector& test_indicator);

/// Draws a cluster with probability proportional to x_entropy + 1e-6 among
/// clusters with at least min_size members. Returns its index in the table,
/// or nullopt when no cluster is large enough (caller falls back to global
/// sampling).
std::optional<std::size_t> select_high_entropy_cluster(const ClusterTable& table,
                                                       std::size_t min_size, Rng& rng);

inline constexpr double kClusterWeightFloor = 1e-6;

}  // namespace klsh
