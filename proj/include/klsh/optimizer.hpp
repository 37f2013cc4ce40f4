#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "klsh/clustering.hpp"
#include "klsh/core.hpp"
#include "klsh/hashfn.hpp"
#include "klsh/infotheory.hpp"
#include "klsh/kernels.hpp"

namespace klsh {

enum class SearchKind { BruteForce, Anneal };

const char* to_string(SearchKind s);
SearchKind search_kind_from_string(const std::string& s);

struct AnnealConfig {
  int budget = 200;
  double t0 = 0.1;  // bits
  double cool = 0.97;
  friend bool operator==(const AnnealConfig&, const AnnealConfig&) = default;
};

struct DeletionConfig {
  bool enabled = true;
  double kappa = 2.0;
  int max_per_step = 1;
  bool protect_global = true;
  friend bool operator==(const DeletionConfig&, const DeletionConfig&) = default;
};

/// Parameters of the greedy hash-function learner.
struct LearnConfig {
  int H = 100;
  std::vector<int> alpha_set{4, 5, 6, 7, 8};
  int zeta = 10;
  KernelConfig kernel;
  HashModelKind model_kind = HashModelKind::Rknn;
  int k = 1;
  RedundancyMode redundancy_mode = RedundancyMode::MaxPairwise;
  double w_mi = 1.0;
  double w_y = 0.0;
  SearchKind search = SearchKind::BruteForce;
  AnnealConfig anneal;
  /// BRUTE_FORCE switches to annealing above this subset size.
  int brute_force_max_alpha = 10;
  DeletionConfig deletion;
  /// 0 means 3 * H.
  int max_iterations = 0;
  std::uint64_t seed = 13;

  int effective_max_iterations() const { return max_iterations > 0 ? max_iterations : 3 * H; }
  /// Throws ValidationError naming the offending field.
  void validate() const;

  friend bool operator==(const LearnConfig&, const LearnConfig&) = default;
};

/// Quantities the objective needs for one greedy step.
struct ObjectiveContext {
  const HashcodeMatrix* existing = nullptr;
  BitVector x;                               // TEST indicator
  std::vector<std::uint32_t> cluster_labels;  // empty until zeta functions exist
  std::vector<std::optional<int>> labels;    // TRAIN labels only; empty when unused
  RedundancyMode mode = RedundancyMode::MaxPairwise;
  std::size_t zeta = 1;
  double w_mi = 1.0;
  double w_y = 0.0;
};

/// H(x,c) - w_mi * redundancy(c) + w_y * (-H(y | cluster, c)).
/// The conditional-entropy term on x is not part of the scalar score; it is
/// pursued through high-entropy cluster sampling instead.
double objective(const BitVector& candidate, const ObjectiveContext& ctx);

int sample_subset_size(std::span<const int> alpha_set, Rng& rng);
/// alpha distinct indices drawn uniformly without replacement from [0, n).
std::vector<std::size_t> sample_global(std::size_t n, std::size_t alpha, Rng& rng);

struct LocalSample {
  std::vector<std::size_t> refs;
  std::optional<std::size_t> cluster;  // nullopt: fell back to global sampling
};
LocalSample sample_local(std::size_t n, const ClusterTable& table, std::size_t alpha, Rng& rng);

struct SplitResult {
  HashFunction function;  // objective_value holds score
  BitVector bits;         // the function applied to every point
  double score = 0.0;
  std::size_t candidates_evaluated = 0;
  /// Annealing only: score after each accepted proposal, in order.
  std::vector<double> accepted_scores;
};

/// Scores splits of one reference subset against the whole dataset.
/// Owns the refs x N similarity block so every candidate reuses it.
class SplitEvaluator {
 public:
  SplitEvaluator(std::span<const std::size_t> refs, const Dataset& dataset,
                 const KernelCache& cache, const LearnConfig& config);

  std::size_t alpha() const { return refs_.size(); }
  HashFunction fit(const SplitBits& z) const;
  BitVector bits(const HashFunction& h) const;
  /// Fits, applies and scores z.
  double score(const SplitBits& z, const ObjectiveContext& ctx) const;

 private:
  std::vector<std::size_t> refs_;
  const Dataset& dataset_;
  const LearnConfig& config_;
  Matrix point_sims_;  // N x alpha
  Matrix ref_gram_;    // alpha x alpha
};

/// All nontrivial splits with z[0] = 1 in lexicographic order: 2^(alpha-1) - 1.
std::vector<SplitBits> enumerate_splits(std::size_t alpha);

SplitBits random_nontrivial_split(std::size_t alpha, Rng& rng);

/// Chooses z for the reference subset: exhaustive when search is BRUTE_FORCE
/// and alpha <= brute_force_max_alpha (ties -> lexicographically smallest z),
/// otherwise Metropolis annealing over single-bit flips.
SplitResult optimize_split(std::span<const std::size_t> refs, const Dataset& dataset,
                           const KernelCache& cache, const ObjectiveContext& ctx,
                           const LearnConfig& config, Rng& rng);
SplitResult optimize_split(std::span<const std::size_t> refs, const Dataset& dataset,
                           const ObjectiveContext& ctx, const LearnConfig& config, Rng& rng);

struct DeletionOutcome {
  std::vector<std::size_t> removed;  // positions before removal, ascending
  std::optional<double> threshold;   // mean - kappa * sd over deletable functions
  std::vector<std::size_t> deletable;  // positions considered, before removal
  std::vector<int> removed_birth_steps;
};

/// Removes up to max_per_step functions whose stored objective falls below
/// mean - kappa * sd (population) of the deletable functions, lowest first.
/// The first zeta GLOBAL functions are never deletable when protect_global.
/// Matrix columns are removed in lockstep.
DeletionOutcome delete_low_info(HashEnsemble& ensemble, HashcodeMatrix& matrix,
                                const DeletionConfig& config);

struct StepRecord {
  int step = 0;
  Scope scope = Scope::Global;
  int alpha = 0;
  double score = 0.0;
  std::string cluster_id;  // local steps only
  bool fell_back_to_global = false;
  bool model_fallback = false;
  std::vector<int> deleted_birth_steps;
  std::optional<double> threshold;
  std::size_t ensemble_size = 0;  // after deletion
};

struct LearnResult {
  HashEnsemble ensemble;
  HashcodeMatrix matrix;
  std::vector<StepRecord> trace;
  /// Aligned with ensemble.functions: threshold of the last deletion pass the
  /// function was eligible for and cleared.
  std::vector<std::optional<double>> survived_threshold;
  bool truncated = false;
  std::string warning;
};

/// Greedy nearly-unsupervised learning of H hash functions.
LearnResult learn(const Dataset& dataset, const LearnConfig& config);

/// Baseline: H functions from random global subsets with random nontrivial
/// splits, no optimization or deletion.
LearnResult learn_random(const Dataset& dataset, const LearnConfig& config);

}  // namespace klsh
