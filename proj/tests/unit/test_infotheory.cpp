#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "klsh/infotheory.hpp"
#include "oracles.hpp"

using namespace klsh;

namespace {

double H(std::vector<std::uint64_t> v) { return entropy(v); }

BitVector bits(const std::string& s) {
  BitVector b(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) b.set(i, s[i] == '1');
  return b;
}

JointCounts random_joint(std::mt19937_64& rng) {
  const std::size_t r = 1 + rng() % 8, c = 1 + rng() % 8;
  JointCounts j(r, c);
  do {
    for (auto& v : j.cells) v = rng() % 21;
  } while (j.total() == 0);
  return j;
}

}  // namespace

TEST_CASE("entropy examples") {
  CHECK(H({5, 5}) == 1.0);
  CHECK(H({10, 0}) == 0.0);
  CHECK(std::abs(H({3, 1}) - 0.8112781244591328) < 1e-15);
  CHECK_THROWS_AS(H({0, 0}), Error);
  CHECK_THROWS_AS(H({}), Error);
}

TEST_CASE("joint entropy examples") {
  CHECK(joint_entropy(JointCounts(2, 2, {2, 2, 2, 2})) == 2.0);
  CHECK(joint_entropy(JointCounts(2, 2, {4, 0, 0, 4})) == 1.0);
  CHECK(std::abs(joint_entropy(JointCounts(2, 2, {3, 1, 1, 3})) - 1.811278124459133) < 1e-14);
  CHECK_THROWS_AS(joint_entropy(JointCounts(2, 2)), Error);
}

TEST_CASE("mutual information examples") {
  const auto c = bits("1101001110");
  CHECK(std::abs(mutual_information(binary_joint(c, c)) - H({6, 4})) < 1e-15);
  CHECK(mutual_information(JointCounts(2, 2, {4, 4, 4, 4})) == 0.0);
  CHECK(std::abs(mutual_information(JointCounts(2, 2, {3, 1, 1, 3})) - 0.18872187554086706) <
        1e-14);
  CHECK_THROWS_AS(mutual_information(JointCounts(2, 2)), Error);
}

TEST_CASE("estimators agree with direct summation on random tables") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const auto j = random_joint(rng);
    const auto p = oracle::probs(j.cells);
    CHECK(std::abs(joint_entropy(j) - oracle::entropy(p)) <= 1e-12);
    CHECK(std::abs(mutual_information(j) - std::max(0.0, oracle::mutual_information(
                                                             j.rows, j.cols, j.cells))) <= 1e-12);
    const double hx = entropy(j.row_marginal());
    const double hc = entropy(j.col_marginal());
    // chain rule
    CHECK(std::abs(joint_entropy(j) - (hx + conditional_entropy(j))) <= 1e-12);
    const double mi = mutual_information(j);
    CHECK(mi >= 0.0);
    CHECK(mi <= std::min(hx, hc) + 1e-12);
    CHECK(entropy(j.row_marginal()) <= std::log2(double(j.rows)) + 1e-12);
  }
}

TEST_CASE("estimators are invariant under relabeling") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const auto j = random_joint(rng);
    std::vector<std::size_t> pr(j.rows), pc(j.cols);
    for (std::size_t i = 0; i < pr.size(); ++i) pr[i] = i;
    for (std::size_t i = 0; i < pc.size(); ++i) pc[i] = i;
    std::shuffle(pr.begin(), pr.end(), rng);
    std::shuffle(pc.begin(), pc.end(), rng);
    JointCounts k(j.rows, j.cols);
    for (std::size_t r = 0; r < j.rows; ++r)
      for (std::size_t c = 0; c < j.cols; ++c) k.at(pr[r], pc[c]) = j.at(r, c);
    CHECK(joint_entropy(k) == joint_entropy(j));
    CHECK(mutual_information(k) == mutual_information(j));
    CHECK(conditional_entropy(k) == conditional_entropy(j));
    auto flat = j.cells;
    std::shuffle(flat.begin(), flat.end(), rng);
    CHECK(entropy(flat) == entropy(j.cells));
  }
}

TEST_CASE("redundancy score") {
  HashcodeMatrix empty(8);
  const auto c = bits("11001010");
  CHECK(redundancy_score(c, empty, RedundancyMode::MaxPairwise) == 0.0);
  CHECK(redundancy_score(c, empty, RedundancyMode::MeanPairwise) == 0.0);
  CHECK(redundancy_score(c, empty, RedundancyMode::Cluster, 3) == 0.0);

  HashcodeMatrix m(8);
  m.append_column(bits("10101010"));
  m.append_column(c);
  CHECK(std::abs(redundancy_score(c, m, RedundancyMode::MaxPairwise) - H({4, 4})) < 1e-15);

  // Column A shares MI 0.18872 with the candidate, column B 0.0487.
  const auto cand = bits("1111000011110000");
  HashcodeMatrix two(16);
  two.append_column(bits("1110100011100001"));
  two.append_column(bits("1100110011001100"));
  std::vector<std::vector<int>> cols(2, std::vector<int>(16));
  std::vector<int> cv(16);
  for (std::size_t i = 0; i < 16; ++i) {
    cv[i] = cand.get(i);
    cols[0][i] = two.bit(i, 0);
    cols[1][i] = two.bit(i, 1);
  }
  const double mi0 = oracle::mutual_information(2, 2, oracle::joint_xc(cols[0], cv));
  const double mi1 = oracle::mutual_information(2, 2, oracle::joint_xc(cols[1], cv));
  CHECK(std::abs(redundancy_score(cand, two, RedundancyMode::MeanPairwise) - (mi0 + mi1) / 2) <
        1e-12);
  CHECK(std::abs(redundancy_score(cand, two, RedundancyMode::MaxPairwise) -
                 std::max(mi0, mi1)) < 1e-12);

  // Cluster mode: MI with the 2-bit pattern label.
  const auto ids = prefix_cluster_ids(two, 2);
  std::vector<std::uint64_t> cells(4 * 2, 0);
  for (std::size_t i = 0; i < 16; ++i) ++cells[ids[i] * 2 + static_cast<std::size_t>(cv[i])];
  const double mic = oracle::mutual_information(4, 2, cells);
  CHECK(std::abs(redundancy_score(cand, two, RedundancyMode::Cluster, 2) - mic) < 1e-12);

  CHECK_THROWS_AS(redundancy_score(bits("101"), m, RedundancyMode::MaxPairwise), Error);
}

TEST_CASE("mean pairwise example 0.105") {
  // A 2x2 table with MI ~0.19 and another with ~0.02 average to ~0.105.
  const double a = mutual_information(JointCounts(2, 2, {3, 1, 1, 3}));
  const double b = mutual_information(JointCounts(2, 2, {7, 5, 5, 7}));
  CHECK(a == doctest::Approx(0.19).epsilon(0.01));
  CHECK(b == doctest::Approx(0.02).epsilon(0.01));
  CHECK((a + b) / 2 == doctest::Approx(0.105).epsilon(0.01));
}

TEST_CASE("label term") {
  using L = std::optional<int>;
  SUBCASE("deterministic per cell") {
    const std::vector<L> y{0, 0, 1, 1};
    const std::vector<std::uint32_t> cl{0, 0, 1, 1};
    CHECK(label_term(y, cl, bits("0101")) == 0.0);
  }
  SUBCASE("balanced and independent") {
    const std::vector<L> y{0, 1, 0, 1, 0, 1, 0, 1};
    const std::vector<std::uint32_t> cl{0, 0, 0, 0, 1, 1, 1, 1};
    CHECK(label_term(y, cl, bits("00110011")) == -1.0);
  }
  SUBCASE("single labeled point") {
    const std::vector<L> y{std::nullopt, 1, std::nullopt};
    const std::vector<std::uint32_t> cl{0, 0, 0};
    CHECK(label_term(y, cl, bits("011")) == 0.0);
  }
  SUBCASE("no labels") {
    const std::vector<L> y{std::nullopt, std::nullopt};
    const std::vector<std::uint32_t> cl{0, 0};
    CHECK_THROWS_AS(label_term(y, cl, bits("01")), Error);
  }
  SUBCASE("matches oracle on random inputs") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t n = 2 + rng() % 40;
      std::vector<L> y(n);
      std::vector<std::uint32_t> cl(n);
      BitVector c(n);
      std::vector<std::pair<std::uint64_t, int>> gy;
      for (std::size_t i = 0; i < n; ++i) {
        cl[i] = static_cast<std::uint32_t>(rng() % 4);
        c.set(i, rng() & 1U);
        if (i == 0 || rng() % 3) {
          y[i] = static_cast<int>(rng() & 1U);
          gy.emplace_back(cl[i] * 2 + c.get(i), *y[i]);
        }
      }
      CHECK(std::abs(label_term(y, cl, c) - oracle::neg_conditional_entropy(gy)) <= 1e-12);
    }
  }
}

TEST_CASE("redundancy mode names") {
  for (auto m : {RedundancyMode::MaxPairwise, RedundancyMode::MeanPairwise, RedundancyMode::Cluster})
    CHECK(redundancy_mode_from_string(to_string(m)) == m);
  CHECK_THROWS_AS(redundancy_mode_from_string("median"), ValidationError);
}
