#include "klsh/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace klsh {

void ForestConfig::validate() const {
  if (R < 1) throw ValidationError("forest.R must be >= 1");
  if (max_depth < 1) throw ValidationError("forest.max_depth must be >= 1");
  if (!(feature_subsample >= 0.0 && feature_subsample <= 1.0))
    throw ValidationError("forest.feature_subsample must lie in (0,1]");
}

int Tree::predict(const BitVector& code) const {
  int at = 0;
  while (!nodes[static_cast<std::size_t>(at)].leaf()) {
    const auto& n = nodes[static_cast<std::size_t>(at)];
    at = code.get(static_cast<std::size_t>(n.feature)) ? n.right : n.left;
  }
  const auto& leaf = nodes[static_cast<std::size_t>(at)];
  return leaf.count1 > leaf.count0 ? 1 : 0;
}

namespace {

double gini(double c0, double c1) {
  const double n = c0 + c1;
  if (n == 0.0) return 0.0;
  const double p = c1 / n;
  return 2.0 * p * (1.0 - p);
}

class TreeBuilder {
 public:
  TreeBuilder(std::span<const BitVector> codes, std::span<const int> labels, std::size_t n_features,
              std::size_t features_per_node, int max_depth, Rng& rng)
      : codes_(codes),
        labels_(labels),
        n_features_(n_features),
        per_node_(features_per_node),
        max_depth_(max_depth),
        rng_(rng) {}

  Tree build(std::vector<std::size_t> sample) {
    Tree t;
    grow(t, std::move(sample), 0);
    return t;
  }

 private:
  int grow(Tree& t, std::vector<std::size_t> rows, int depth) {
    const int index = static_cast<int>(t.nodes.size());
    t.nodes.emplace_back();
    TreeNode node;
    for (auto r : rows) (labels_[r] != 0 ? node.count1 : node.count0)++;

    const bool pure = node.count0 == 0 || node.count1 == 0;
    if (pure || depth >= max_depth_ || n_features_ == 0) {
      t.nodes[static_cast<std::size_t>(index)] = node;
      return index;
    }

    // Features are visited in a random order; constant features do not
    // count toward the per-node budget.
    std::vector<std::size_t> order(n_features_);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = 0; i + 1 < n_features_; ++i)
      std::swap(order[i], order[i + uniform_index(rng_, n_features_ - i)]);
    const double parent = gini(node.count0, node.count1);
    const double total = static_cast<double>(rows.size());
    double best_impurity = parent;
    int best_feature = -1;
    std::size_t inspected = 0;
    for (auto f : order) {
      if (inspected == per_node_) break;
      double l0 = 0, l1 = 0, r0 = 0, r1 = 0;
      for (auto r : rows) {
        const bool one = labels_[r] != 0;
        if (codes_[r].get(f))
          (one ? r1 : r0) += 1;
        else
          (one ? l1 : l0) += 1;
      }
      const double nl = l0 + l1, nr = r0 + r1;
      if (nl == 0 || nr == 0) continue;
      ++inspected;
      const double impurity = (nl * gini(l0, l1) + nr * gini(r0, r1)) / total;
      if (impurity < best_impurity - 1e-12) {
        best_impurity = impurity;
        best_feature = static_cast<int>(f);
      }
    }
    if (best_feature < 0) {
      t.nodes[static_cast<std::size_t>(index)] = node;
      return index;
    }

    std::vector<std::size_t> left, right;
    for (auto r : rows) (codes_[r].get(static_cast<std::size_t>(best_feature)) ? right : left).push_back(r);
    rows.clear();
    rows.shrink_to_fit();
    node.feature = best_feature;
    node.left = grow(t, std::move(left), depth + 1);
    node.right = grow(t, std::move(right), depth + 1);
    t.nodes[static_cast<std::size_t>(index)] = node;
    return index;
  }

  std::span<const BitVector> codes_;
  std::span<const int> labels_;
  std::size_t n_features_;
  std::size_t per_node_;
  int max_depth_;
  Rng& rng_;
};

}  // namespace

Forest train_forest(std::span<const BitVector> codes, std::span<const int> labels,
                    const ForestConfig& config) {
  config.validate();
  if (codes.size() != labels.size()) throw ValidationError("codes/labels length mismatch");
  if (codes.empty()) throw ValidationError("forest training needs labeled points");
  const std::size_t h = codes.front().size();
  for (const auto& c : codes)
    if (c.size() != h) throw ValidationError("hashcodes have unequal lengths");
  std::size_t ones = 0;
  for (int l : labels) {
    if (l != 0 && l != 1) throw ValidationError("labels must be 0 or 1");
    ones += static_cast<std::size_t>(l);
  }
  if (ones == 0 || ones == labels.size())
    throw ValidationError("forest training needs both classes");

  std::size_t per_node = 0;
  if (h > 0) {
    const double frac = config.feature_subsample > 0.0
                            ? config.feature_subsample
                            : std::ceil(std::sqrt(static_cast<double>(h))) / static_cast<double>(h);
    per_node = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::ceil(frac * static_cast<double>(h))), 1, h);
  }

  Forest forest;
  forest.code_length = h;
  forest.trees.resize(static_cast<std::size_t>(config.R));
  const std::size_t n = codes.size();
  parallel_for(forest.trees.size(), [&](std::size_t t) {
    Rng rng(mix_seed(config.seed, t));
    std::vector<std::size_t> sample(n);
    if (config.bootstrap) {
      for (auto& s : sample) s = uniform_index(rng, n);
    } else {
      std::iota(sample.begin(), sample.end(), 0);
    }
    TreeBuilder builder(codes, labels, h, per_node, config.max_depth, rng);
    forest.trees[t] = builder.build(std::move(sample));
  });
  return forest;
}

std::vector<int> predict_forest(const Forest& forest, std::span<const BitVector> codes) {
  std::vector<int> out(codes.size(), 0);
  for (const auto& c : codes)
    if (c.size() != forest.code_length)
      throw ValidationError("hashcode length does not match the forest");
  parallel_for(codes.size(), [&](std::size_t i) {
    std::size_t votes = 0;
    for (const auto& t : forest.trees) votes += static_cast<std::size_t>(t.predict(codes[i]));
    out[i] = 2 * votes > forest.trees.size() ? 1 : 0;
  });
  return out;
}

int knn_hamming(std::span<const BitVector> train_codes, std::span<const int> train_labels,
                const BitVector& query, int k) {
  if (k < 1 || k % 2 == 0) throw ValidationError("k must be odd and positive");
  if (static_cast<std::size_t>(k) > train_codes.size())
    throw ValidationError("k exceeds training set size");
  if (train_codes.size() != train_labels.size())
    throw ValidationError("codes/labels length mismatch");
  std::vector<std::pair<std::size_t, std::size_t>> dist;  // (distance, index)
  dist.reserve(train_codes.size());
  for (std::size_t i = 0; i < train_codes.size(); ++i) {
    const auto& c = train_codes[i];
    if (c.size() != query.size()) throw ValidationError("hashcode length mismatch");
    std::size_t d = 0;
    for (std::size_t w = 0; w < c.words().size(); ++w)
      d += static_cast<std::size_t>(std::popcount(c.words()[w] ^ query.words()[w]));
    dist.emplace_back(d, i);
  }
  const auto kk = static_cast<std::size_t>(k);
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk), dist.end());
  std::size_t ones = 0;
  for (std::size_t i = 0; i < kk; ++i) ones += train_labels[dist[i].second] != 0;
  return 2 * ones > kk ? 1 : 0;
}

Metrics evaluate(std::span<const int> predicted, std::span<const int> gold) {
  if (predicted.size() != gold.size()) throw ValidationError("prediction/gold length mismatch");
  if (predicted.empty()) throw ValidationError("nothing to evaluate");
  Metrics m;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const bool p = predicted[i] != 0;
    const bool g = gold[i] != 0;
    if (p && g)
      ++m.tp;
    else if (p)
      ++m.fp;
    else if (g)
      ++m.fn;
    else
      ++m.tn;
  }
  if (m.tp + m.fp > 0) m.precision = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);
  if (m.tp + m.fn > 0) m.recall = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
  if (m.precision + m.recall > 0.0)
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

}  // namespace klsh
