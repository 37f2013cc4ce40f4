#include <cmath>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "klsh/kernels.hpp"
#include "oracles.hpp"

using namespace klsh;

namespace {

KernelConfig rbf(double gamma) {
  KernelConfig c;
  c.kind = KernelKind::Rbf;
  c.gamma = gamma;
  return c;
}

KernelConfig subseq(double lambda, int max_len, bool normalize) {
  KernelConfig c;
  c.kind = KernelKind::Subseq;
  c.lambda = lambda;
  c.max_len = max_len;
  c.normalize = normalize;
  return c;
}

TokenSeq random_tokens(std::mt19937_64& rng, std::size_t len, int vocab) {
  TokenSeq s;
  for (std::size_t i = 0; i < len; ++i)
    s.push_back(std::string(1, static_cast<char>('a' + rng() % static_cast<unsigned>(vocab))));
  return s;
}

}  // namespace

TEST_CASE("rbf examples") {
  const Payload a = DenseVector{1.0, 2.0, 3.0};
  CHECK(kernel_eval(a, a, rbf(0.5)) == 1.0);
  const Payload b = DenseVector{0.0, 0.0};
  const Payload c = DenseVector{1.0, 1.0};
  CHECK(kernel_eval(b, c, rbf(0.5)) == doctest::Approx(0.36787944117144233).epsilon(1e-15));
  CHECK(std::abs(kernel_eval(b, c, rbf(0.5)) - std::exp(-1.0)) < 1e-15);
}

TEST_CASE("cosine") {
  KernelConfig c;
  c.kind = KernelKind::Cosine;
  CHECK(kernel_eval(DenseVector{1, 0}, DenseVector{0, 3}, c) == 0.0);
  CHECK(kernel_eval(DenseVector{2, 0}, DenseVector{-1, 0}, c) == doctest::Approx(-1.0));
  CHECK(kernel_eval(DenseVector{1, 1}, DenseVector{1, 1}, c) == doctest::Approx(1.0));
  CHECK_THROWS_WITH_AS(kernel_eval(DenseVector{0, 0}, DenseVector{1, 1}, c), "degenerate payload",
                       ValidationError);
}

TEST_CASE("subsequence kernel example") {
  const TokenSeq ab{"a", "b"};
  CHECK(subsequence_kernel(ab, ab, 0.5, 2) == doctest::Approx(0.5625).epsilon(1e-15));
  CHECK(kernel_eval(ab, ab, subseq(0.5, 2, false)) == doctest::Approx(0.5625));
  CHECK(kernel_eval(ab, ab, subseq(0.5, 2, true)) == doctest::Approx(1.0));
  CHECK_THROWS_WITH_AS(kernel_eval(TokenSeq{}, ab, subseq(0.5, 2, true)), "degenerate payload",
                       ValidationError);
}

TEST_CASE("subsequence kernel agrees with brute force up to length 6") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    const auto a = random_tokens(rng, 1 + rng() % 6, 3);
    const auto b = random_tokens(rng, 1 + rng() % 6, 3);
    const double lambda = 0.1 + 0.8 * static_cast<double>(rng() % 1000) / 1000.0;
    const int max_len = 1 + static_cast<int>(rng() % 4);
    const double dp = subsequence_kernel(a, b, lambda, max_len);
    const double bf = oracle::subsequence_kernel(a, b, lambda, max_len);
    CHECK(std::abs(dp - bf) <= 1e-10);
  }
}

TEST_CASE("symmetry and unit self-similarity") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 100; ++trial) {
    DenseVector u(5), v(5);
    for (auto& e : u) e = n01(rng);
    for (auto& e : v) e = n01(rng);
    for (auto kind : {KernelKind::Rbf, KernelKind::Cosine}) {
      KernelConfig c;
      c.kind = kind;
      CHECK(kernel_eval(u, v, c) == kernel_eval(v, u, c));
      CHECK(std::abs(kernel_eval(u, u, c) - 1.0) <= 1e-12);
      const double k = kernel_eval(u, v, c);
      CHECK(k <= 1.0 + 1e-12);
      CHECK(k >= (kind == KernelKind::Rbf ? 0.0 : -1.0 - 1e-12));
    }
    const auto s = random_tokens(rng, 1 + rng() % 8, 4);
    const auto t = random_tokens(rng, 1 + rng() % 8, 4);
    const auto cfg = subseq(0.6, 3, true);
    CHECK(kernel_eval(s, t, cfg) == kernel_eval(t, s, cfg));
    CHECK(std::abs(kernel_eval(s, s, cfg) - 1.0) <= 1e-12);
    CHECK(kernel_eval(s, t, cfg) >= 0.0);
    CHECK(kernel_eval(s, t, cfg) <= 1.0 + 1e-12);
  }
}

TEST_CASE("kind mismatch") {
  CHECK_THROWS_AS(kernel_eval(TokenSeq{"a"}, TokenSeq{"a"}, rbf(1.0)), ValidationError);
  CHECK_THROWS_AS(kernel_eval(DenseVector{1}, DenseVector{1}, subseq(0.5, 2, true)),
                  ValidationError);
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(rbf(0.0).validate(), ValidationError);
  CHECK_THROWS_AS(subseq(1.0, 2, true).validate(), ValidationError);
  CHECK_THROWS_AS(subseq(0.0, 2, true).validate(), ValidationError);
  CHECK_THROWS_AS(subseq(0.5, 0, true).validate(), ValidationError);
  CHECK_NOTHROW(subseq(0.5, 1, true).validate());
}

TEST_CASE("gram") {
  const auto ds = fixtures::random_vectors(7, 4, 2);
  std::vector<Payload> pts;
  for (const auto& p : ds.points()) pts.push_back(p.payload);
  const auto cfg = rbf(0.3);

  const auto g = gram(pts, pts, cfg);
  for (std::size_t i = 0; i < pts.size(); ++i) CHECK(g(i, i) == doctest::Approx(1.0));

  const std::vector<Payload> two(pts.begin(), pts.begin() + 2);
  const std::vector<Payload> three(pts.begin() + 2, pts.begin() + 5);
  const auto g23 = gram(two, three, cfg);
  CHECK(g23.rows == 2);
  CHECK(g23.cols == 3);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(std::abs(g23(i, j) - kernel_eval(two[i], three[j], cfg)) <= 1e-12);

  std::mt19937_64 rng(1);
  std::vector<Payload> toks;
  for (int i = 0; i < 6; ++i) toks.push_back(random_tokens(rng, 2 + rng() % 5, 3));
  const auto sc = subseq(0.5, 3, true);
  const auto gs = gram(toks, toks, sc);
  for (std::size_t i = 0; i < toks.size(); ++i)
    for (std::size_t j = 0; j < toks.size(); ++j)
      CHECK(std::abs(gs(i, j) - kernel_eval(toks[i], toks[j], sc)) <= 1e-12);
}

TEST_CASE("gram is identical across thread counts") {
  const auto ds = fixtures::random_vectors(40, 6, 4);
  std::vector<Payload> pts;
  for (const auto& p : ds.points()) pts.push_back(p.payload);
  set_thread_count(1);
  const auto a = gram(pts, pts, rbf(0.2));
  set_thread_count(8);
  const auto b = gram(pts, pts, rbf(0.2));
  set_thread_count(0);
  CHECK(a.data == b.data);
}

TEST_CASE("kernel cache block matches direct evaluation") {
  const auto ds = fixtures::random_vectors(12, 3, 8);
  std::vector<Payload> pts;
  for (const auto& p : ds.points()) pts.push_back(p.payload);
  const auto cfg = rbf(0.7);
  KernelCache cache(pts, cfg);
  const std::vector<std::size_t> refs{3, 0, 11};
  const auto blk = cache.block(refs);
  REQUIRE(blk.rows == 3);
  REQUIRE(blk.cols == 12);
  for (std::size_t r = 0; r < refs.size(); ++r)
    for (std::size_t j = 0; j < pts.size(); ++j)
      CHECK(blk(r, j) == kernel_eval(pts[refs[r]], pts[j], cfg));
}
