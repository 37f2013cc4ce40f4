#include "klsh/hashfn.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace klsh {

const char* to_string(HashModelKind k) { return k == HashModelKind::Rknn ? "rknn" : "maxmargin"; }

HashModelKind hash_model_from_string(const std::string& s) {
  if (s == "rknn") return HashModelKind::Rknn;
  if (s == "maxmargin") return HashModelKind::MaxMargin;
  throw ValidationError("model_kind: unknown hash model '" + s + "'");
}

const char* to_string(Scope s) { return s == Scope::Global ? "global" : "local"; }

bool nontrivial(const SplitBits& z) {
  const bool any_one = std::any_of(z.begin(), z.end(), [](auto b) { return b != 0; });
  const bool any_zero = std::any_of(z.begin(), z.end(), [](auto b) { return b == 0; });
  return any_one && any_zero;
}

std::optional<MaxMarginModel> fit_dual_perceptron(const Matrix& ref_gram, const SplitBits& z,
                                                  int max_epochs) {
  const std::size_t a = z.size();
  // Canonical orientation: the first reference is always on the positive side.
  const bool flip = z[0] == 0;
  std::vector<double> y(a);
  for (std::size_t r = 0; r < a; ++r) y[r] = ((z[r] != 0) != flip) ? 1.0 : -1.0;

  MaxMarginModel m;
  m.coefficients.assign(a, 0.0);
  for (int epoch = 0; epoch < max_epochs; ++epoch) {
    bool mistakes = false;
    for (std::size_t r = 0; r < a; ++r) {
      double f = m.bias;
      for (std::size_t s = 0; s < a; ++s) f += m.coefficients[s] * ref_gram(s, r);
      if (y[r] * f <= 0.0) {
        m.coefficients[r] += y[r];
        m.bias += y[r];
        mistakes = true;
      }
    }
    if (!mistakes) {
      if (flip) {
        for (auto& c : m.coefficients) c = -c;
        m.bias = -m.bias;
        m.negated = true;
      }
      return m;
    }
  }
  return std::nullopt;
}

namespace {

void check_split(const SplitBits& z, std::size_t n_refs) {
  if (z.size() < 2) throw ValidationError("hash function needs alpha >= 2 references");
  if (z.size() != n_refs) throw ValidationError("split length does not match reference count");
  if (!nontrivial(z)) throw ValidationError("trivial split");
}

void check_k(int k, std::size_t alpha) {
  if (k < 1 || k % 2 == 0) throw ValidationError("k must be an odd positive integer");
  if (static_cast<std::size_t>(k) > alpha) throw ValidationError("k exceeds reference count");
}

}  // namespace

HashFunction fit_hash_function(std::vector<std::string> ref_ids, std::vector<Payload> refs,
                               SplitBits z, const KernelConfig& kernel, HashModelKind kind,
                               int k) {
  check_split(z, refs.size());
  const Matrix g = kind == HashModelKind::MaxMargin ? gram(refs, refs, kernel) : Matrix{};
  return fit_hash_function(std::move(ref_ids), std::move(refs), std::move(z), g, kind, k);
}

HashFunction fit_hash_function(std::vector<std::string> ref_ids, std::vector<Payload> refs,
                               SplitBits z, const Matrix& ref_gram, HashModelKind kind, int k) {
  check_split(z, refs.size());
  if (ref_ids.size() != refs.size()) throw ValidationError("reference id count mismatch");
  {
    auto sorted = ref_ids;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw ValidationError("reference ids must be distinct");
  }
  HashFunction h;
  h.ref_ids = std::move(ref_ids);
  h.refs = std::move(refs);
  h.z = std::move(z);
  if (kind == HashModelKind::MaxMargin) {
    if (auto m = fit_dual_perceptron(ref_gram, h.z)) {
      h.model = std::move(*m);
      return h;
    }
    h.fallback = true;
  }
  check_k(k, h.z.size());
  h.model = RknnModel{k};
  return h;
}

bool predict_bit(const HashModel& model, const SplitBits& z, std::span<const double> sims) {
  if (const auto* rk = std::get_if<RknnModel>(&model)) {
    if (rk->k == 1) {
      double best_one = -std::numeric_limits<double>::infinity();
      double best_zero = best_one;
      for (std::size_t r = 0; r < z.size(); ++r) {
        if (z[r] != 0)
          best_one = std::max(best_one, sims[r]);
        else
          best_zero = std::max(best_zero, sims[r]);
      }
      return best_one > best_zero;
    }
    std::vector<std::size_t> order(z.size());
    std::iota(order.begin(), order.end(), 0);
    const auto k = static_cast<std::size_t>(rk->k);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](std::size_t a, std::size_t b) {
                        return sims[a] > sims[b] || (sims[a] == sims[b] && a < b);
                      });
    std::size_t ones = 0;
    for (std::size_t i = 0; i < k; ++i) ones += z[order[i]] != 0;
    return 2 * ones > k;
  }
  const auto& mm = std::get<MaxMarginModel>(model);
  double f = mm.bias;
  for (std::size_t r = 0; r < mm.coefficients.size(); ++r) f += mm.coefficients[r] * sims[r];
  return mm.negated ? f >= 0.0 : f > 0.0;
}

bool hash_point(const HashFunction& h, const Payload& p, const KernelConfig& kernel) {
  std::vector<double> sims(h.refs.size());
  for (std::size_t r = 0; r < h.refs.size(); ++r) sims[r] = kernel_eval(p, h.refs[r], kernel);
  return predict_bit(h.model, h.z, sims);
}

std::size_t HashEnsemble::global_count() const {
  return static_cast<std::size_t>(std::count_if(
      functions.begin(), functions.end(), [](const auto& f) { return f.scope == Scope::Global; }));
}

std::map<std::string, Payload> HashEnsemble::reference_points() const {
  std::map<std::string, Payload> pool;
  for (const auto& f : functions)
    for (std::size_t r = 0; r < f.refs.size(); ++r) pool.emplace(f.ref_ids[r], f.refs[r]);
  return pool;
}

BitVector hash_column(const HashFunction& h, std::span<const Payload> payloads,
                      const KernelConfig& kernel) {
  // Similarities: payloads x refs, one row per point.
  const Matrix sims = gram(payloads, h.refs, kernel);
  BitVector col(payloads.size());
  for (std::size_t i = 0; i < payloads.size(); ++i)
    col.set(i, predict_bit(h.model, h.z, sims.row(i)));
  return col;
}

HashcodeMatrix hash_all(const HashEnsemble& ensemble, std::span<const Payload> payloads) {
  HashcodeMatrix m(payloads.size());
  for (const auto& f : ensemble.functions)
    m.append_column(hash_column(f, payloads, ensemble.kernel));
  return m;
}

HashcodeMatrix hash_all(const HashEnsemble& ensemble, const Dataset& dataset) {
  std::vector<Payload> payloads;
  payloads.reserve(dataset.size());
  for (const auto& p : dataset.points()) payloads.push_back(p.payload);
  return hash_all(ensemble, payloads);
}

}  // namespace klsh
