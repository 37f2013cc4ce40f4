#include "klsh/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"

namespace klsh {

void SynthConfig::validate() const {
  if (n_clusters < 2) throw ValidationError("n_clusters must be >= 2");
  if (n_train < n_clusters) throw ValidationError("n_train must be >= n_clusters");
  if (n_test < n_clusters) throw ValidationError("n_test must be >= n_clusters");
  if (!(cluster_spread > 0.0)) throw ValidationError("cluster_spread must be > 0");
  if (!(shift >= 0.0 && shift <= 1.0)) throw ValidationError("shift must lie in [0,1]");
  if (!(label_noise >= 0.0 && label_noise < 0.5))
    throw ValidationError("label_noise must lie in [0,0.5)");
  if (mode == SynthMode::VectorGmm) {
    if (dim < 1) throw ValidationError("dim must be >= 1");
  } else {
    if (vocab_size < 2) throw ValidationError("vocab_size must be >= 2");
    if (seq_len < 1) throw ValidationError("seq_len must be >= 1");
    if (!(drift >= 0.0 && drift <= 1.0)) throw ValidationError("drift must lie in [0,1]");
    if (label_rule != LabelRule::ClusterParity)
      throw ValidationError("label_rule: hyperplane requires mode vector_gmm");
  }
}

std::vector<double> test_mixing(int n_clusters, double shift) {
  const auto k = static_cast<std::size_t>(n_clusters);
  const std::size_t upper_begin = k / 2;
  std::vector<double> mix(k);
  for (std::size_t c = 0; c < k; ++c) {
    const double skew = c >= upper_begin ? 1.0 / static_cast<double>(k - upper_begin) : 0.0;
    mix[c] = (1.0 - shift) / static_cast<double>(k) + shift * skew;
  }
  return mix;
}

namespace {

int draw_category(const std::vector<double>& probs, Rng& rng) {
  const double u = uniform_unit(rng);
  double acc = 0.0;
  for (std::size_t c = 0; c < probs.size(); ++c) {
    acc += probs[c];
    if (u < acc) return static_cast<int>(c);
  }
  // Rounding can leave u just above the final cumulative sum.
  for (std::size_t c = probs.size(); c-- > 0;)
    if (probs[c] > 0.0) return static_cast<int>(c);
  return 0;
}

std::string point_id(const char* prefix, int i) {
  std::string digits = std::to_string(i);
  if (digits.size() < 5) digits.insert(0, 5 - digits.size(), '0');
  return std::string(prefix) + digits;
}

}  // namespace

SynthOutput synth_generate(const SynthConfig& config) {
  config.validate();
  Rng rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto k = static_cast<std::size_t>(config.n_clusters);

  SynthOutput out;
  out.train_mixing.assign(k, 1.0 / static_cast<double>(k));
  out.test_mixing = test_mixing(config.n_clusters, config.shift);

  // Mixture components: sphere centers or token templates.
  std::vector<DenseVector> centers;
  DenseVector normal_vec;
  std::vector<TokenSeq> templates;
  const auto dim = static_cast<std::size_t>(config.dim);
  if (config.mode == SynthMode::VectorGmm) {
    for (std::size_t c = 0; c < k; ++c) {
      DenseVector v(dim);
      double norm = 0.0;
      do {
        norm = 0.0;
        for (auto& e : v) {
          e = normal(rng);
          norm += e * e;
        }
      } while (norm == 0.0);
      const double scale = 4.0 * config.cluster_spread / std::sqrt(norm);
      for (auto& e : v) e *= scale;
      centers.push_back(std::move(v));
    }
    normal_vec.resize(dim);
    for (auto& e : normal_vec) e = normal(rng);
  } else {
    for (std::size_t c = 0; c < k; ++c) {
      TokenSeq t(static_cast<std::size_t>(config.seq_len));
      for (auto& tok : t)
        tok = "w" + std::to_string(uniform_index(rng, static_cast<std::size_t>(config.vocab_size)));
      templates.push_back(std::move(t));
    }
  }

  constexpr double kTemplateNoise = 0.1;
  std::vector<DataPoint> points;
  auto emit = [&](Split split, int index, const std::vector<double>& mixing) {
    const int cluster = draw_category(mixing, rng);
    DataPoint p;
    p.id = point_id(split == Split::Train ? "tr" : "te", index);
    p.split = split;
    int label = cluster % 2;
    if (config.mode == SynthMode::VectorGmm) {
      DenseVector x = centers[static_cast<std::size_t>(cluster)];
      for (auto& e : x) e += config.cluster_spread * normal(rng);
      if (config.label_rule == LabelRule::Hyperplane) {
        double s = 0.0;
        for (std::size_t d = 0; d < dim; ++d) s += normal_vec[d] * x[d];
        label = s > 0.0 ? 1 : 0;
      }
      p.payload = std::move(x);
    } else {
      TokenSeq t = templates[static_cast<std::size_t>(cluster)];
      const double sub = kTemplateNoise + (split == Split::Test ? config.drift : 0.0);
      for (auto& tok : t)
        if (uniform_unit(rng) < sub)
          tok = "w" +
                std::to_string(uniform_index(rng, static_cast<std::size_t>(config.vocab_size)));
      p.payload = std::move(t);
    }
    if (uniform_unit(rng) < config.label_noise) label = 1 - label;
    p.label = label;
    points.push_back(std::move(p));
    out.clusters.push_back(cluster);
  };
  for (int i = 0; i < config.n_train; ++i) emit(Split::Train, i, out.train_mixing);
  for (int i = 0; i < config.n_test; ++i) emit(Split::Test, i, out.test_mixing);
  out.dataset = Dataset(std::move(points));
  return out;
}

void save_synth(const std::string& path, const SynthOutput& out, const SynthConfig& config) {
  save_dataset(path, out.dataset);
  nlohmann::json meta;
  meta["seed"] = config.seed;
  meta["n_clusters"] = config.n_clusters;
  meta["shift"] = config.shift;
  meta["train_mixing"] = out.train_mixing;
  meta["test_mixing"] = out.test_mixing;
  nlohmann::json clusters = nlohmann::json::object();
  for (std::size_t i = 0; i < out.clusters.size(); ++i)
    clusters[out.dataset[i].id] = out.clusters[i];
  meta["clusters"] = std::move(clusters);
  std::ofstream f(path + ".meta", std::ios::binary);
  if (!f) throw Error("cannot write '" + path + ".meta'");
  f << meta.dump(2) << '\n';
}

}  // namespace klsh
