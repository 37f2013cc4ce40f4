#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "klsh/core.hpp"

namespace klsh {

enum class SynthMode { VectorGmm, TokenGrammar };
enum class LabelRule { ClusterParity, Hyperplane };

struct SynthConfig {
  SynthMode mode = SynthMode::VectorGmm;
  int n_train = 200;
  int n_test = 200;
  int n_clusters = 4;
  int dim = 8;                 // VECTOR_GMM
  double cluster_spread = 1.0;
  double shift = 0.0;          // 0: identical mixing, 1: test only from upper clusters
  LabelRule label_rule = LabelRule::ClusterParity;
  double label_noise = 0.0;
  int vocab_size = 50;         // TOKEN_GRAMMAR
  int seq_len = 8;
  double drift = 0.0;
  std::uint64_t seed = 13;

  void validate() const;
};

struct SynthOutput {
  Dataset dataset;
  std::vector<int> clusters;  // true component of each point, dataset order
  std::vector<double> train_mixing;
  std::vector<double> test_mixing;
};

/// Mixture data with controllable train/test covariate shift.
SynthOutput synth_generate(const SynthConfig& config);

/// Mixing proportions of TEST points: (1 - shift) * uniform + shift * uniform
/// over the upper half of cluster ids.
std::vector<double> test_mixing(int n_clusters, double shift);

/// Writes `<path>` (dataset records) and `<path>.meta` (true clusters and
/// mixing proportions).
void save_synth(const std::string& path, const SynthOutput& out, const SynthConfig& config);

}  // namespace klsh
