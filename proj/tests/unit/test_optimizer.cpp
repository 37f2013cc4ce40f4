#include <cmath>
#include <map>
#include <random>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "klsh/optimizer.hpp"
#include "oracles.hpp"

using namespace klsh;

namespace {

BitVector bits(const std::string& s) {
  BitVector b(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) b.set(i, s[i] == '1');
  return b;
}

std::vector<int> ints(const BitVector& b) {
  std::vector<int> v;
  for (std::size_t i = 0; i < b.size(); ++i) v.push_back(b.get(i));
  return v;
}

LearnConfig small_config() {
  LearnConfig c;
  c.H = 8;
  c.zeta = 4;
  c.alpha_set = {3, 4};
  c.kernel.kind = KernelKind::Rbf;
  c.kernel.gamma = 0.5;
  return c;
}

HashFunction stub(double f, Scope scope, int birth) {
  HashFunction h;
  h.ref_ids = {"a", "b"};
  h.refs = {DenseVector{0.0}, DenseVector{1.0}};
  h.z = {1, 0};
  h.model = RknnModel{1};
  h.objective_value = f;
  h.scope = scope;
  h.birth_step = birth;
  return h;
}

std::pair<HashEnsemble, HashcodeMatrix> stub_ensemble(const std::vector<double>& f, int zeta,
                                                      int n_global) {
  HashEnsemble e;
  e.zeta = zeta;
  HashcodeMatrix m(4);
  for (std::size_t l = 0; l < f.size(); ++l) {
    e.functions.push_back(stub(f[l], int(l) < n_global ? Scope::Global : Scope::Local, int(l)));
    BitVector col(4);
    col.set(l % 4, true);
    m.append_column(col);
  }
  return {e, m};
}

}  // namespace

TEST_CASE("sample_subset_size") {
  Rng rng(1);
  const std::vector<int> single{4};
  CHECK(sample_subset_size(single, rng) == 4);
  CHECK_THROWS_AS(sample_subset_size(std::vector<int>{}, rng), ValidationError);
  const std::vector<int> three{4, 6, 8};
  std::map<int, int> freq;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) ++freq[sample_subset_size(three, rng)];
  const double p = 1.0 / 3.0, sigma = std::sqrt(draws * p * (1 - p));
  for (int a : three) CHECK(std::abs(freq[a] - draws * p) <= 3 * sigma);
}

TEST_CASE("sample_global") {
  Rng rng(3);
  auto all = sample_global(10, 10, rng);
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < 10; ++i) CHECK(all[i] == i);
  Rng a(7), b(7);
  const auto s1 = sample_global(100, 4, a);
  CHECK(s1 == sample_global(100, 4, b));
  CHECK(std::set<std::size_t>(s1.begin(), s1.end()).size() == 4);
  CHECK_THROWS_AS(sample_global(100, 101, rng), ValidationError);
}

TEST_CASE("sample_local") {
  // Cluster "0": 5 train + 5 test; cluster "1": 10 train.
  HashcodeMatrix m(20);
  BitVector col(20), x(20);
  for (std::size_t i = 10; i < 20; ++i) col.set(i, true);
  for (std::size_t i = 5; i < 10; ++i) x.set(i, true);
  m.append_column(col);
  const auto table = assign_clusters(m, 1, x);

  SUBCASE("balanced cluster is chosen") {
    Rng rng(5);
    int hits = 0;
    for (int t = 0; t < 10000; ++t) {
      const auto s = sample_local(20, table, 4, rng);
      REQUIRE(s.cluster.has_value());
      bool inside = true;
      for (auto r : s.refs) inside = inside && table.assignment[r] == *s.cluster;
      CHECK(inside);
      hits += table.clusters[*s.cluster].id == "0";
    }
    CHECK(hits >= 9900);
  }
  SUBCASE("single large cluster") {
    HashcodeMatrix one(6);
    one.append_column(BitVector(6));
    const auto t1 = assign_clusters(one, 1, bits("010101"));
    Rng rng(2);
    const auto s = sample_local(6, t1, 4, rng);
    CHECK(s.refs.size() == 4);
    CHECK(*s.cluster == 0);
  }
  SUBCASE("fallback to global") {
    Rng rng(2), ref(2);
    const auto s = sample_local(20, table, 11, rng);
    CHECK_FALSE(s.cluster.has_value());
    CHECK(s.refs.size() == 11);
    CHECK(s.refs == sample_global(20, 11, ref));
  }
}

TEST_CASE("objective examples") {
  HashcodeMatrix empty(4);
  ObjectiveContext ctx;
  ctx.existing = &empty;
  ctx.x = bits("0011");
  CHECK(objective(bits("0101"), ctx) == 2.0);
  CHECK(objective(bits("0000"), ctx) == 1.0);

  HashcodeMatrix one(4);
  one.append_column(bits("0101"));
  ctx.existing = &one;
  CHECK(objective(bits("0101"), ctx) == 1.0);
  CHECK_THROWS_AS(objective(bits("01"), ctx), Error);
}

TEST_CASE("objective matches oracle and is complement invariant") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 8 + rng() % 60;
    BitVector x(n), c(n);
    for (std::size_t i = 0; i < n; ++i) {
      x.set(i, rng() & 1U);
      c.set(i, rng() & 1U);
    }
    HashcodeMatrix existing(n);
    std::vector<std::vector<int>> cols;
    const std::size_t h = rng() % 4;
    for (std::size_t l = 0; l < h; ++l) {
      BitVector col(n);
      for (std::size_t i = 0; i < n; ++i) col.set(i, rng() & 1U);
      existing.append_column(col);
      cols.push_back(ints(col));
    }
    ObjectiveContext ctx;
    ctx.existing = &existing;
    ctx.x = x;
    ctx.mode = trial % 2 ? RedundancyMode::MeanPairwise : RedundancyMode::MaxPairwise;
    ctx.w_mi = 0.7;
    const double f = objective(c, ctx);
    CHECK(std::abs(f - oracle::objective(ints(x), ints(c), cols, 0.7, trial % 2)) <= 1e-12);
    CHECK(objective(c.complemented(), ctx) == f);
  }
}

TEST_CASE("enumerate_splits") {
  const auto s4 = enumerate_splits(4);
  CHECK(s4.size() == 7);
  for (const auto& z : s4) {
    CHECK(z[0] == 1);
    CHECK(nontrivial(z));
  }
  CHECK(std::is_sorted(s4.begin(), s4.end()));
  CHECK(enumerate_splits(2).size() == 1);
  CHECK(enumerate_splits(6).size() == 31);
}

TEST_CASE("brute force matches the exhaustive oracle") {
  const auto ds = fixtures::random_vectors(30, 3, 77);
  auto cfg = small_config();
  std::mt19937_64 rng(10);
  for (std::size_t alpha : {2, 3, 4, 5}) {
    for (auto kind : {HashModelKind::Rknn, HashModelKind::MaxMargin}) {
      cfg.model_kind = kind;
      Rng r(rng());
      const auto refs = sample_global(ds.size(), alpha, r);
      HashcodeMatrix existing(ds.size());
      BitVector col(ds.size());
      for (std::size_t i = 0; i < ds.size(); ++i) col.set(i, rng() & 1U);
      existing.append_column(col);
      ObjectiveContext ctx;
      ctx.existing = &existing;
      ctx.x = ds.test_indicator();
      const auto res = optimize_split(refs, ds, ctx, cfg, r);
      const auto want =
          oracle::exhaustive_split(refs, ds, cfg.kernel, kind, 1, ctx, {ints(col)});
      CHECK(res.score == want.best);
      CHECK(std::abs(res.score - want.best_formula) <= 1e-12);
      CHECK(res.candidates_evaluated == want.candidates);
      CHECK(res.candidates_evaluated == (std::size_t{1} << (alpha - 1)) - 1);
      CHECK(res.function.objective_value == res.score);
      CHECK(res.function.z[0] == 1);
      CHECK(res.bits == hash_column(res.function, [&] {
              std::vector<Payload> p;
              for (const auto& d : ds.points()) p.push_back(d.payload);
              return p;
            }(), cfg.kernel));
    }
  }
}

TEST_CASE("search is never worse than random splits") {
  const auto ds = fixtures::random_vectors(40, 4, 5);
  auto cfg = small_config();
  HashcodeMatrix empty(ds.size());
  ObjectiveContext ctx;
  ctx.existing = &empty;
  ctx.x = ds.test_indicator();
  std::vector<Payload> payloads;
  for (const auto& p : ds.points()) payloads.push_back(p.payload);
  KernelCache cache(payloads, cfg.kernel);
  for (auto search : {SearchKind::BruteForce, SearchKind::Anneal}) {
    cfg.search = search;
    for (int trial = 0; trial < 5; ++trial) {
      Rng rng(static_cast<std::uint64_t>(trial));
      const auto refs = sample_global(ds.size(), 6, rng);
      const auto res = optimize_split(refs, ds, cache, ctx, cfg, rng);
      SplitEvaluator ev(refs, ds, cache, cfg);
      for (int i = 0; i < 50; ++i) {
        const auto z = random_nontrivial_split(6, rng);
        if (search == SearchKind::BruteForce) CHECK(res.score >= ev.score(z, ctx));
      }
      CHECK(res.score == ev.score(res.function.z, ctx));
    }
  }
}

TEST_CASE("annealing at zero temperature only climbs") {
  const auto ds = fixtures::random_vectors(40, 4, 6);
  auto cfg = small_config();
  cfg.search = SearchKind::Anneal;
  cfg.anneal.t0 = 0.0;
  cfg.anneal.budget = 100;
  HashcodeMatrix empty(ds.size());
  ObjectiveContext ctx;
  ctx.existing = &empty;
  ctx.x = ds.test_indicator();
  for (int trial = 0; trial < 5; ++trial) {
    Rng rng(static_cast<std::uint64_t>(100 + trial));
    const auto refs = sample_global(ds.size(), 8, rng);
    const auto res = optimize_split(refs, ds, ctx, cfg, rng);
    for (std::size_t i = 1; i < res.accepted_scores.size(); ++i)
      CHECK(res.accepted_scores[i] >= res.accepted_scores[i - 1]);
    CHECK(res.candidates_evaluated <= 101);
  }
}

TEST_CASE("brute force switches to annealing above the alpha limit") {
  const auto ds = fixtures::random_vectors(30, 2, 9);
  auto cfg = small_config();
  cfg.brute_force_max_alpha = 3;
  cfg.anneal.budget = 10;
  HashcodeMatrix empty(ds.size());
  ObjectiveContext ctx;
  ctx.existing = &empty;
  ctx.x = ds.test_indicator();
  Rng rng(1);
  const auto refs = sample_global(ds.size(), 6, rng);
  const auto res = optimize_split(refs, ds, ctx, cfg, rng);
  CHECK(res.candidates_evaluated <= 11);
  CHECK_FALSE(res.accepted_scores.empty());
}

TEST_CASE("delete_low_info examples") {
  DeletionConfig d;
  SUBCASE("nothing below threshold") {
    auto [e, m] = stub_ensemble({2.0, 2.0, 1.9}, 1, 0);
    d.kappa = 2.0;
    const auto out = delete_low_info(e, m, d);
    CHECK(out.removed.empty());
    REQUIRE(out.threshold.has_value());
    CHECK(std::abs(*out.threshold - 1.8723857625084603) < 1e-12);
    CHECK(e.size() == 3);
  }
  SUBCASE("third removed") {
    auto [e, m] = stub_ensemble({2.0, 2.0, 0.1}, 1, 0);
    d.kappa = 1.0;
    const auto col0 = m.column(0), col1 = m.column(1);
    const auto out = delete_low_info(e, m, d);
    CHECK(out.removed == std::vector<std::size_t>{2});
    CHECK(std::abs(*out.threshold - 0.47099807716370634) < 1e-12);
    CHECK(e.size() == 2);
    CHECK(m.cols() == 2);
    CHECK(m.column(0) == col0);
    CHECK(m.column(1) == col1);
    CHECK(out.removed_birth_steps == std::vector<int>{2});
  }
  SUBCASE("only protected functions remain") {
    auto [e, m] = stub_ensemble({2.0, 0.1, 0.0}, 3, 3);
    const auto out = delete_low_info(e, m, d);
    CHECK(out.removed.empty());
    CHECK(out.deletable.empty());
    CHECK(e.size() == 3);
  }
  SUBCASE("lowest first and capped per step") {
    auto [e, m] = stub_ensemble({5, 5, 5, 5, 5, 5, 5, 5, 0.2, 0.1}, 1, 0);
    d.kappa = 0.5;
    d.max_per_step = 1;
    const auto out = delete_low_info(e, m, d);
    CHECK(out.removed == std::vector<std::size_t>{9});
    d.max_per_step = 5;
    const auto out2 = delete_low_info(e, m, d);
    CHECK(out2.removed == std::vector<std::size_t>{8});
  }
  SUBCASE("disabled") {
    auto [e, m] = stub_ensemble({2.0, 2.0, 0.1}, 1, 0);
    d.enabled = false;
    d.kappa = 1.0;
    CHECK(delete_low_info(e, m, d).removed.empty());
  }
}

TEST_CASE("learn on a small dataset") {
  const auto out = synth_generate(fixtures::gmm(20, 20, 4, 3, 0.0, 3));
  auto cfg = small_config();
  const auto res = learn(out.dataset, cfg);
  CHECK(res.ensemble.size() == 8);
  CHECK_FALSE(res.truncated);
  CHECK(res.matrix.rows() == 40);
  CHECK(res.matrix.cols() == 8);
  for (int l = 0; l < 4; ++l) CHECK(res.ensemble.functions[l].scope == Scope::Global);
  for (int l = 4; l < 8; ++l) CHECK(res.ensemble.functions[l].scope == Scope::Local);
  CHECK(hash_all(res.ensemble, out.dataset) == res.matrix);
  for (std::size_t l = 0; l < res.ensemble.size(); ++l)
    if (res.survived_threshold[l]) CHECK(res.ensemble.functions[l].objective_value >= *res.survived_threshold[l]);

  const auto again = learn(out.dataset, cfg);
  CHECK(again.ensemble.functions == res.ensemble.functions);
  CHECK(again.matrix == res.matrix);
  set_thread_count(8);
  const auto threaded = learn(out.dataset, cfg);
  set_thread_count(0);
  CHECK(threaded.ensemble.functions == res.ensemble.functions);
}

TEST_CASE("learn with one function") {
  const auto ds = fixtures::random_vectors(10, 2, 1);
  LearnConfig cfg;
  cfg.H = 1;
  cfg.zeta = 1;
  cfg.alpha_set = {4};
  const auto res = learn(ds, cfg);
  REQUIRE(res.ensemble.size() == 1);
  CHECK(res.ensemble.functions[0].scope == Scope::Global);
  CHECK(res.trace.size() == 1);
}

TEST_CASE("learn truncates when max_iterations is hit") {
  const auto ds = fixtures::random_vectors(30, 2, 4);
  auto cfg = small_config();
  cfg.H = 20;
  cfg.zeta = 2;
  cfg.max_iterations = 20;
  cfg.deletion.kappa = 0.0;
  cfg.deletion.max_per_step = 3;
  const auto res = learn(ds, cfg);
  if (res.ensemble.size() < 20) {
    CHECK(res.truncated);
    CHECK_FALSE(res.warning.empty());
  }
  CHECK(res.trace.size() == 20);
}

TEST_CASE("learn preconditions") {
  auto cfg = small_config();
  std::vector<DataPoint> pts;
  for (int i = 0; i < 10; ++i) pts.push_back({"p" + std::to_string(i), DenseVector{double(i)}, Split::Train, 0});
  CHECK_THROWS_AS(learn(Dataset(pts), cfg), ValidationError);
  const auto tiny = fixtures::random_vectors(3, 2, 1);
  CHECK_THROWS_AS(learn(tiny, cfg), ValidationError);
  cfg.zeta = 9;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = small_config();
  cfg.alpha_set = {1};
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = small_config();
  cfg.max_iterations = 3;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = small_config();
  cfg.w_mi = -1;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
}

TEST_CASE("label term participates when weighted") {
  const auto out = synth_generate(fixtures::gmm(20, 20, 4, 3, 0.0, 8));
  auto cfg = small_config();
  cfg.w_y = 1.0;
  const auto res = learn(out.dataset, cfg);
  CHECK(res.ensemble.size() == 8);
}

TEST_CASE("random construction baseline") {
  const auto ds = fixtures::random_vectors(30, 2, 4);
  auto cfg = small_config();
  const auto res = learn_random(ds, cfg);
  CHECK(res.ensemble.size() == 8);
  for (const auto& f : res.ensemble.functions) CHECK(nontrivial(f.z));
  CHECK(learn_random(ds, cfg).ensemble.functions == res.ensemble.functions);
}
