#include "klsh/clustering.hpp"

#include <algorithm>
#include <map>

#include "klsh/infotheory.hpp"

namespace klsh {

std::size_t ClusterTable::find(const std::string& id) const {
  auto it = std::lower_bound(clusters.begin(), clusters.end(), id,
                             [](const Cluster& c, const std::string& v) { return c.id < v; });
  if (it == clusters.end() || it->id != id) return static_cast<std::size_t>(-1);
  return static_cast<std::size_t>(it - clusters.begin());
}

ClusterTable assign_clusters(const HashcodeMatrix& matrix, std::size_t zeta,
                             const BitVector& test_indicator) {
  if (zeta < 1) throw ValidationError("zeta must be >= 1");
  if (matrix.cols() < zeta)
    throw ValidationError("cluster assignment needs at least zeta hash columns");
  if (test_indicator.size() != matrix.rows())
    throw ValidationError("indicator length does not match hashcode rows");

  std::map<std::string, std::vector<std::size_t>> groups;
  std::string key(zeta, '0');
  for (std::size_t i = 0; i < matrix.rows(); ++i) {
    for (std::size_t l = 0; l < zeta; ++l) key[l] = matrix.bit(i, l) ? '1' : '0';
    groups[key].push_back(i);
  }

  ClusterTable table;
  table.assignment.assign(matrix.rows(), 0);
  for (auto& [id, members] : groups) {
    Cluster c;
    c.id = id;
    for (auto i : members) {
      if (test_indicator.get(i))
        ++c.test_count;
      else
        ++c.train_count;
      table.assignment[i] = static_cast<std::uint32_t>(table.clusters.size());
    }
    const std::uint64_t counts[2] = {c.train_count, c.test_count};
    c.x_entropy = entropy(counts);
    c.members = std::move(members);
    table.clusters.push_back(std::move(c));
  }
  return table;
}

std::optional<std::size_t> select_high_entropy_cluster(const ClusterTable& table,
                                                       std::size_t min_size, Rng& rng) {
  std::vector<std::size_t> eligible;
  std::vector<double> cumulative;
  double total = 0.0;
  for (std::size_t c = 0; c < table.clusters.size(); ++c) {
    if (table.clusters[c].size() < min_size) continue;
    total += table.clusters[c].x_entropy + kClusterWeightFloor;
    eligible.push_back(c);
    cumulative.push_back(total);
  }
  if (eligible.empty()) return std::nullopt;
  const double u = uniform_unit(rng) * total;
  const auto pos = static_cast<std::size_t>(
      std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
  return eligible[std::min(pos, eligible.size() - 1)];
}

}  // namespace klsh
