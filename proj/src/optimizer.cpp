#include "klsh/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace klsh {

const char* to_string(SearchKind s) { return s == SearchKind::BruteForce ? "brute_force" : "anneal"; }

SearchKind search_kind_from_string(const std::string& s) {
  if (s == "brute_force") return SearchKind::BruteForce;
  if (s == "anneal") return SearchKind::Anneal;
  throw ValidationError("search: unknown search '" + s + "'");
}

void LearnConfig::validate() const {
  kernel.validate();
  if (zeta < 1) throw ValidationError("zeta must be >= 1");
  if (zeta > 64) throw ValidationError("zeta must be <= 64");
  if (H < zeta) throw ValidationError("H must be >= zeta");
  if (alpha_set.empty()) throw ValidationError("alpha_set must be nonempty");
  for (int a : alpha_set) {
    if (a < 2) throw ValidationError("alpha_set entries must be >= 2");
    if (a > 64) throw ValidationError("alpha_set entries must be <= 64");
  }
  if (k < 1 || k % 2 == 0) throw ValidationError("k must be an odd positive integer");
  if (k > *std::min_element(alpha_set.begin(), alpha_set.end()))
    throw ValidationError("k must not exceed the smallest alpha");
  if (!(w_mi >= 0.0)) throw ValidationError("w_mi must be >= 0");
  if (!(w_y >= 0.0)) throw ValidationError("w_y must be >= 0");
  if (brute_force_max_alpha < 2 || brute_force_max_alpha > 24)
    throw ValidationError("brute_force_max_alpha must lie in [2,24]");
  if (anneal.budget < 1) throw ValidationError("anneal.budget must be >= 1");
  if (!(anneal.t0 >= 0.0)) throw ValidationError("anneal.t0 must be >= 0");
  if (!(anneal.cool > 0.0 && anneal.cool <= 1.0))
    throw ValidationError("anneal.cool must lie in (0,1]");
  if (!(deletion.kappa >= 0.0)) throw ValidationError("deletion.kappa must be >= 0");
  if (deletion.max_per_step < 0) throw ValidationError("deletion.max_per_step must be >= 0");
  if (max_iterations != 0 && max_iterations < H)
    throw ValidationError("max_iterations must be >= H");
}

double objective(const BitVector& candidate, const ObjectiveContext& ctx) {
  if (candidate.size() != ctx.x.size())
    throw ValidationError("candidate length does not match dataset size");
  double score = joint_entropy(binary_joint(ctx.x, candidate));
  if (ctx.existing != nullptr && ctx.existing->cols() > 0 && ctx.w_mi > 0.0)
    score -= ctx.w_mi * redundancy_score(candidate, *ctx.existing, ctx.mode, ctx.zeta);
  if (ctx.w_y > 0.0 && !ctx.labels.empty()) {
    if (ctx.cluster_labels.empty()) {
      const std::vector<std::uint32_t> single(candidate.size(), 0);
      score += ctx.w_y * label_term(ctx.labels, single, candidate);
    } else {
      score += ctx.w_y * label_term(ctx.labels, ctx.cluster_labels, candidate);
    }
  }
  return score;
}

int sample_subset_size(std::span<const int> alpha_set, Rng& rng) {
  if (alpha_set.empty()) throw ValidationError("alpha_set must be nonempty");
  return alpha_set[uniform_index(rng, alpha_set.size())];
}

std::vector<std::size_t> sample_global(std::size_t n, std::size_t alpha, Rng& rng) {
  if (alpha > n) throw ValidationError("subset size exceeds dataset size");
  // Partial Fisher-Yates over an index table.
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  for (std::size_t i = 0; i < alpha; ++i) std::swap(pool[i], pool[i + uniform_index(rng, n - i)]);
  pool.resize(alpha);
  return pool;
}

LocalSample sample_local(std::size_t n, const ClusterTable& table, std::size_t alpha, Rng& rng) {
  const auto chosen = select_high_entropy_cluster(table, alpha, rng);
  if (!chosen) return {sample_global(n, alpha, rng), std::nullopt};
  const auto& members = table.clusters[*chosen].members;
  auto picks = sample_global(members.size(), alpha, rng);
  for (auto& p : picks) p = members[p];
  return {std::move(picks), chosen};
}

SplitEvaluator::SplitEvaluator(std::span<const std::size_t> refs, const Dataset& dataset,
                               const KernelCache& cache, const LearnConfig& config)
    : refs_(refs.begin(), refs.end()), dataset_(dataset), config_(config) {
  if (refs_.size() < 2) throw ValidationError("hash function needs alpha >= 2 references");
  const Matrix block = cache.block(refs_);
  const std::size_t a = refs_.size();
  const std::size_t n = block.cols;
  point_sims_ = Matrix(n, a);
  for (std::size_t r = 0; r < a; ++r)
    for (std::size_t j = 0; j < n; ++j) point_sims_(j, r) = block(r, j);
  ref_gram_ = Matrix(a, a);
  for (std::size_t r = 0; r < a; ++r)
    for (std::size_t s = 0; s < a; ++s) ref_gram_(r, s) = block(r, refs_[s]);
}

HashFunction SplitEvaluator::fit(const SplitBits& z) const {
  std::vector<std::string> ids;
  std::vector<Payload> payloads;
  for (auto r : refs_) {
    ids.push_back(dataset_[r].id);
    payloads.push_back(dataset_[r].payload);
  }
  return fit_hash_function(std::move(ids), std::move(payloads), z, ref_gram_, config_.model_kind,
                           config_.k);
}

BitVector SplitEvaluator::bits(const HashFunction& h) const {
  BitVector out(point_sims_.rows);
  for (std::size_t j = 0; j < point_sims_.rows; ++j)
    out.set(j, predict_bit(h.model, h.z, point_sims_.row(j)));
  return out;
}

double SplitEvaluator::score(const SplitBits& z, const ObjectiveContext& ctx) const {
  if (config_.model_kind == HashModelKind::Rknn) {
    // The RKNN rule needs no fitted state beyond z.
    const HashModel model = RknnModel{config_.k};
    BitVector out(point_sims_.rows);
    for (std::size_t j = 0; j < point_sims_.rows; ++j)
      out.set(j, predict_bit(model, z, point_sims_.row(j)));
    return objective(out, ctx);
  }
  return objective(bits(fit(z)), ctx);
}

std::vector<SplitBits> enumerate_splits(std::size_t alpha) {
  if (alpha < 2) throw ValidationError("hash function needs alpha >= 2 references");
  const std::uint64_t count = (std::uint64_t{1} << (alpha - 1)) - 1;
  std::vector<SplitBits> out;
  out.reserve(count);
  for (std::uint64_t m = 0; m < count; ++m) {
    SplitBits z(alpha, 0);
    z[0] = 1;
    for (std::size_t j = 1; j < alpha; ++j) z[j] = (m >> (alpha - 1 - j)) & 1U;
    out.push_back(std::move(z));
  }
  return out;
}

SplitBits random_nontrivial_split(std::size_t alpha, Rng& rng) {
  SplitBits z(alpha);
  do {
    for (auto& b : z) b = static_cast<std::uint8_t>(uniform_index(rng, 2));
  } while (!nontrivial(z));
  return z;
}

namespace {

SplitResult finish(const SplitEvaluator& eval, const SplitBits& z, double score,
                   std::size_t evaluated) {
  SplitResult out;
  out.function = eval.fit(z);
  out.function.objective_value = score;
  out.bits = eval.bits(out.function);
  out.score = score;
  out.candidates_evaluated = evaluated;
  return out;
}

SplitResult brute_force(const SplitEvaluator& eval, const ObjectiveContext& ctx) {
  const auto splits = enumerate_splits(eval.alpha());
  std::vector<double> scores(splits.size());
  parallel_for(splits.size(), [&](std::size_t i) { scores[i] = eval.score(splits[i], ctx); });
  std::size_t best = 0;
  for (std::size_t i = 1; i < splits.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  return finish(eval, splits[best], scores[best], splits.size());
}

SplitResult anneal(const SplitEvaluator& eval, const ObjectiveContext& ctx,
                   const AnnealConfig& cfg, Rng& rng) {
  SplitBits z = random_nontrivial_split(eval.alpha(), rng);
  double current = eval.score(z, ctx);
  SplitBits best_z = z;
  double best = current;
  std::size_t evaluated = 1;
  std::vector<double> accepted;
  double t = cfg.t0;
  for (int step = 0; step < cfg.budget; ++step, t *= cfg.cool) {
    const std::size_t j = uniform_index(rng, z.size());
    SplitBits proposal = z;
    proposal[j] ^= 1U;
    if (!nontrivial(proposal)) continue;
    const double s = eval.score(proposal, ctx);
    ++evaluated;
    const double delta = s - current;
    const double u = uniform_unit(rng);
    if (delta >= 0.0 || (t > 0.0 && u < std::exp(delta / t))) {
      z = std::move(proposal);
      current = s;
      accepted.push_back(s);
      if (s > best) {
        best = s;
        best_z = z;
      }
    }
  }
  auto out = finish(eval, best_z, best, evaluated);
  out.accepted_scores = std::move(accepted);
  return out;
}

}  // namespace

SplitResult optimize_split(std::span<const std::size_t> refs, const Dataset& dataset,
                           const KernelCache& cache, const ObjectiveContext& ctx,
                           const LearnConfig& config, Rng& rng) {
  const SplitEvaluator eval(refs, dataset, cache, config);
  if (config.search == SearchKind::BruteForce &&
      eval.alpha() <= static_cast<std::size_t>(config.brute_force_max_alpha))
    return brute_force(eval, ctx);
  return anneal(eval, ctx, config.anneal, rng);
}

SplitResult optimize_split(std::span<const std::size_t> refs, const Dataset& dataset,
                           const ObjectiveContext& ctx, const LearnConfig& config, Rng& rng) {
  std::vector<Payload> payloads;
  payloads.reserve(dataset.size());
  for (const auto& p : dataset.points()) payloads.push_back(p.payload);
  const KernelCache cache(payloads, config.kernel);
  return optimize_split(refs, dataset, cache, ctx, config, rng);
}

DeletionOutcome delete_low_info(HashEnsemble& ensemble, HashcodeMatrix& matrix,
                                const DeletionConfig& config) {
  if (matrix.cols() != ensemble.size())
    throw Error("hashcode matrix and ensemble are out of step");
  DeletionOutcome out;
  std::size_t globals_seen = 0;
  for (std::size_t l = 0; l < ensemble.size(); ++l) {
    const bool is_global = ensemble.functions[l].scope == Scope::Global;
    const bool protected_fn = config.protect_global && is_global &&
                              globals_seen < static_cast<std::size_t>(ensemble.zeta);
    if (is_global) ++globals_seen;
    if (!protected_fn) out.deletable.push_back(l);
  }
  if (!config.enabled || out.deletable.empty()) return out;

  double mean = 0.0;
  for (auto l : out.deletable) mean += ensemble.functions[l].objective_value;
  mean /= static_cast<double>(out.deletable.size());
  double var = 0.0;
  for (auto l : out.deletable) {
    const double d = ensemble.functions[l].objective_value - mean;
    var += d * d;
  }
  var /= static_cast<double>(out.deletable.size());
  const double threshold = mean - config.kappa * std::sqrt(var);
  out.threshold = threshold;

  std::vector<std::size_t> below;
  for (auto l : out.deletable)
    if (ensemble.functions[l].objective_value < threshold) below.push_back(l);
  std::stable_sort(below.begin(), below.end(), [&](std::size_t a, std::size_t b) {
    return ensemble.functions[a].objective_value < ensemble.functions[b].objective_value;
  });
  if (below.size() > static_cast<std::size_t>(config.max_per_step))
    below.resize(static_cast<std::size_t>(config.max_per_step));
  std::sort(below.begin(), below.end());
  for (auto l : below) out.removed_birth_steps.push_back(ensemble.functions[l].birth_step);
  for (auto it = below.rbegin(); it != below.rend(); ++it) {
    ensemble.functions.erase(ensemble.functions.begin() + static_cast<std::ptrdiff_t>(*it));
    matrix.erase_column(*it);
  }
  out.removed = std::move(below);
  return out;
}

namespace {

std::vector<Payload> payloads_of(const Dataset& ds) {
  std::vector<Payload> out;
  out.reserve(ds.size());
  for (const auto& p : ds.points()) out.push_back(p.payload);
  return out;
}

void check_learnable(const Dataset& dataset, const LearnConfig& config) {
  config.validate();
  dataset.require_train_and_test();
  if (dataset.kind() != config.kernel.payload_kind())
    throw ValidationError(std::string("kernel ") + to_string(config.kernel.kind) +
                          " does not match " + to_string(dataset.kind()) + " payloads");
  const int max_alpha = *std::max_element(config.alpha_set.begin(), config.alpha_set.end());
  if (static_cast<std::size_t>(max_alpha) > dataset.size())
    throw ValidationError("alpha_set: subset size exceeds dataset size");
}

}  // namespace

LearnResult learn(const Dataset& dataset, const LearnConfig& config) {
  check_learnable(dataset, config);
  const auto payloads = payloads_of(dataset);
  const KernelCache cache(payloads, config.kernel);
  const std::size_t n = dataset.size();
  const auto target = static_cast<std::size_t>(config.H);
  const auto zeta = static_cast<std::size_t>(config.zeta);

  LearnResult res;
  res.ensemble.kernel = config.kernel;
  res.ensemble.zeta = config.zeta;
  res.matrix = HashcodeMatrix(n);

  ObjectiveContext ctx;
  ctx.x = dataset.test_indicator();
  ctx.mode = config.redundancy_mode;
  ctx.zeta = zeta;
  ctx.w_mi = config.w_mi;
  ctx.w_y = config.w_y;
  if (config.w_y > 0.0) {
    ctx.labels.resize(n);
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (dataset[i].split == Split::Train && dataset[i].label) {
        ctx.labels[i] = dataset[i].label;
        any = true;
      }
    }
    if (!any) throw ValidationError("w_y > 0 requires labeled TRAIN points");
  }

  const int max_iter = config.effective_max_iterations();
  int iter = 0;
  for (; iter < max_iter && res.ensemble.size() < target; ++iter) {
    Rng rng(mix_seed(config.seed, static_cast<std::uint64_t>(iter)));
    StepRecord rec;
    rec.step = iter;
    rec.alpha = sample_subset_size(config.alpha_set, rng);
    const auto alpha = static_cast<std::size_t>(rec.alpha);

    std::vector<std::size_t> refs;
    ctx.cluster_labels.clear();
    if (res.ensemble.size() < zeta) {
      rec.scope = Scope::Global;
      refs = sample_global(n, alpha, rng);
    } else {
      rec.scope = Scope::Local;
      const auto table = assign_clusters(res.matrix, zeta, ctx.x);
      auto local = sample_local(n, table, alpha, rng);
      refs = std::move(local.refs);
      if (local.cluster)
        rec.cluster_id = table.clusters[*local.cluster].id;
      else
        rec.fell_back_to_global = true;
      ctx.cluster_labels = table.assignment;
    }
    ctx.existing = &res.matrix;

    auto split = optimize_split(refs, dataset, cache, ctx, config, rng);
    split.function.scope = rec.scope;
    split.function.birth_step = iter;
    rec.score = split.score;
    rec.model_fallback = split.function.fallback;

    // Global functions stay ahead of local ones so the cluster prefix is the
    // first zeta global functions.
    const std::size_t pos =
        rec.scope == Scope::Global ? res.ensemble.global_count() : res.ensemble.size();
    res.ensemble.functions.insert(res.ensemble.functions.begin() + static_cast<std::ptrdiff_t>(pos),
                                  std::move(split.function));
    res.matrix.insert_column(pos, std::move(split.bits));
    res.survived_threshold.insert(
        res.survived_threshold.begin() + static_cast<std::ptrdiff_t>(pos), std::nullopt);

    // Objective values are read before deletion mutates the ensemble.
    std::vector<double> values;
    for (const auto& f : res.ensemble.functions) values.push_back(f.objective_value);
    const auto del = delete_low_info(res.ensemble, res.matrix, config.deletion);
    rec.threshold = del.threshold;
    rec.deleted_birth_steps = del.removed_birth_steps;
    if (del.threshold) {
      for (auto l : del.deletable)
        if (values[l] >= *del.threshold) res.survived_threshold[l] = del.threshold;
    }
    for (auto it = del.removed.rbegin(); it != del.removed.rend(); ++it)
      res.survived_threshold.erase(res.survived_threshold.begin() +
                                   static_cast<std::ptrdiff_t>(*it));
    rec.ensemble_size = res.ensemble.size();
    res.trace.push_back(std::move(rec));
  }

  if (res.ensemble.size() < target) {
    res.truncated = true;
    res.warning = "max_iterations (" + std::to_string(max_iter) + ") reached with " +
                  std::to_string(res.ensemble.size()) + " of " + std::to_string(target) +
                  " hash functions";
  }
  return res;
}

LearnResult learn_random(const Dataset& dataset, const LearnConfig& config) {
  check_learnable(dataset, config);
  const auto payloads = payloads_of(dataset);
  const KernelCache cache(payloads, config.kernel);
  const std::size_t n = dataset.size();

  LearnResult res;
  res.ensemble.kernel = config.kernel;
  res.ensemble.zeta = config.zeta;
  res.matrix = HashcodeMatrix(n);
  ObjectiveContext ctx;
  ctx.x = dataset.test_indicator();
  ctx.existing = &res.matrix;
  ctx.mode = config.redundancy_mode;
  ctx.zeta = static_cast<std::size_t>(config.zeta);
  ctx.w_mi = config.w_mi;

  for (int step = 0; step < config.H; ++step) {
    Rng rng(mix_seed(config.seed, static_cast<std::uint64_t>(step)));
    const auto alpha = static_cast<std::size_t>(sample_subset_size(config.alpha_set, rng));
    const auto refs = sample_global(n, alpha, rng);
    const SplitEvaluator eval(refs, dataset, cache, config);
    auto fn = eval.fit(random_nontrivial_split(alpha, rng));
    auto bits = eval.bits(fn);
    fn.objective_value = objective(bits, ctx);
    fn.scope = Scope::Global;
    fn.birth_step = step;

    StepRecord rec;
    rec.step = step;
    rec.alpha = static_cast<int>(alpha);
    rec.score = fn.objective_value;
    rec.model_fallback = fn.fallback;
    res.ensemble.functions.push_back(std::move(fn));
    res.matrix.append_column(std::move(bits));
    res.survived_threshold.push_back(std::nullopt);
    rec.ensemble_size = res.ensemble.size();
    res.trace.push_back(std::move(rec));
  }
  return res;
}

}  // namespace klsh
