#include "klsh/kernels.hpp"

#include <cmath>

namespace klsh {

const char* to_string(KernelKind k) {
  switch (k) {
    case KernelKind::Rbf: return "rbf";
    case KernelKind::Cosine: return "cosine";
    case KernelKind::Subseq: return "subseq";
  }
  return "?";
}

KernelKind kernel_kind_from_string(const std::string& s) {
  if (s == "rbf") return KernelKind::Rbf;
  if (s == "cosine") return KernelKind::Cosine;
  if (s == "subseq") return KernelKind::Subseq;
  throw ValidationError("kernel.kind: unknown kernel '" + s + "'");
}

void KernelConfig::validate() const {
  if (!(gamma > 0.0)) throw ValidationError("kernel.gamma must be > 0");
  if (!(lambda > 0.0 && lambda < 1.0)) throw ValidationError("kernel.lambda must lie in (0,1)");
  if (max_len < 1) throw ValidationError("kernel.max_len must be >= 1");
}

namespace {

void check_kind(const Payload& p, const KernelConfig& config) {
  if (kind_of(p) != config.payload_kind())
    throw ValidationError(std::string("kernel ") + to_string(config.kind) + " expects " +
                          to_string(config.payload_kind()) + " payloads");
}

double rbf(const DenseVector& a, const DenseVector& b, double gamma) {
  if (a.size() != b.size()) throw ValidationError("vector dimensionality mismatch");
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    d2 += d * d;
  }
  return std::exp(-gamma * d2);
}

double dot(const DenseVector& a, const DenseVector& b) {
  if (a.size() != b.size()) throw ValidationError("vector dimensionality mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Raw similarity; for COSINE this is the plain dot product.
double raw_kernel(const Payload& a, const Payload& b, const KernelConfig& config) {
  switch (config.kind) {
    case KernelKind::Rbf:
      return rbf(std::get<DenseVector>(a), std::get<DenseVector>(b), config.gamma);
    case KernelKind::Cosine:
      return dot(std::get<DenseVector>(a), std::get<DenseVector>(b));
    case KernelKind::Subseq:
      return subsequence_kernel(std::get<TokenSeq>(a), std::get<TokenSeq>(b), config.lambda,
                                config.max_len);
  }
  return 0.0;
}

bool normalizes(const KernelConfig& config) {
  // Cosine is normalized by definition; RBF self-similarity is 1.
  return config.kind == KernelKind::Cosine ||
         (config.kind == KernelKind::Subseq && config.normalize);
}

double combine(double raw, double self_a, double self_b) {
  const double v = raw / std::sqrt(self_a * self_b);
  // Guard against rounding pushing a normalized value past its bounds.
  if (v > 1.0) return 1.0;
  if (v < -1.0) return -1.0;
  return v;
}

}  // namespace

double subsequence_kernel(const TokenSeq& lhs, const TokenSeq& rhs, double lambda,
                          int max_len) {
  // Fixed argument order keeps the floating-point summation, and so the
  // result, bitwise symmetric.
  const bool swap = rhs < lhs;
  const TokenSeq& a = swap ? rhs : lhs;
  const TokenSeq& b = swap ? lhs : rhs;
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  if (n == 0 || m == 0 || max_len < 1) return 0.0;
  const double l2 = lambda * lambda;

  // prefix[i][j] = K'_{len-1}(a[0..i), b[0..j)): weighted count of
  // subsequences of length len-1 whose weight runs to the end of both prefixes.
  std::vector<double> prefix((n + 1) * (m + 1), 1.0);
  std::vector<double> next((n + 1) * (m + 1), 0.0);
  auto at = [m](std::vector<double>& v, std::size_t i, std::size_t j) -> double& {
    return v[i * (m + 1) + j];
  };

  double total = 0.0;
  for (int len = 1; len <= max_len; ++len) {
    double k_len = 0.0;
    for (std::size_t i = 1; i <= n; ++i)
      for (std::size_t j = 1; j <= m; ++j)
        if (a[i - 1] == b[j - 1]) k_len += l2 * at(prefix, i - 1, j - 1);
    total += k_len;
    if (len == max_len) break;

    // K'_len via the auxiliary K'' recursion, O(n*m) per length.
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t i = 1; i <= n; ++i) {
      double kpp = 0.0;
      for (std::size_t j = 1; j <= m; ++j) {
        kpp = lambda * kpp + (a[i - 1] == b[j - 1] ? l2 * at(prefix, i - 1, j - 1) : 0.0);
        at(next, i, j) = lambda * at(next, i - 1, j) + kpp;
      }
    }
    std::swap(prefix, next);
  }
  return total;
}

double self_similarity(const Payload& a, const KernelConfig& config) {
  check_kind(a, config);
  return raw_kernel(a, a, config);
}

double kernel_eval(const Payload& a, const Payload& b, const KernelConfig& config) {
  check_kind(a, config);
  check_kind(b, config);
  const double raw = raw_kernel(a, b, config);
  if (!normalizes(config)) return raw;
  const double sa = raw_kernel(a, a, config);
  const double sb = raw_kernel(b, b, config);
  if (!(sa > 0.0) || !(sb > 0.0)) throw ValidationError("degenerate payload");
  return combine(raw, sa, sb);
}

Matrix gram(std::span<const Payload> points, std::span<const Payload> queries,
            const KernelConfig& config) {
  for (const auto& p : points) check_kind(p, config);
  for (const auto& q : queries) check_kind(q, config);
  const bool norm = normalizes(config);
  std::vector<double> self_p(points.size(), 1.0), self_q(queries.size(), 1.0);
  if (norm) {
    for (std::size_t i = 0; i < points.size(); ++i) {
      self_p[i] = raw_kernel(points[i], points[i], config);
      if (!(self_p[i] > 0.0)) throw ValidationError("degenerate payload");
    }
    for (std::size_t j = 0; j < queries.size(); ++j) {
      self_q[j] = raw_kernel(queries[j], queries[j], config);
      if (!(self_q[j] > 0.0)) throw ValidationError("degenerate payload");
    }
  }
  Matrix out(points.size(), queries.size());
  parallel_for(points.size(), [&](std::size_t i) {
    for (std::size_t j = 0; j < queries.size(); ++j) {
      const double raw = raw_kernel(points[i], queries[j], config);
      out(i, j) = norm ? combine(raw, self_p[i], self_q[j]) : raw;
    }
  });
  return out;
}

KernelCache::KernelCache(std::span<const Payload> payloads, const KernelConfig& config)
    : payloads_(payloads), config_(config), self_(payloads.size(), 1.0) {
  for (const auto& p : payloads_) check_kind(p, config_);
  if (normalizes(config_)) {
    parallel_for(payloads_.size(),
                 [&](std::size_t i) { self_[i] = raw_kernel(payloads_[i], payloads_[i], config_); });
    for (double s : self_)
      if (!(s > 0.0)) throw ValidationError("degenerate payload");
  }
}

Matrix KernelCache::block(std::span<const std::size_t> refs) const {
  const bool norm = normalizes(config_);
  Matrix out(refs.size(), payloads_.size());
  parallel_for(refs.size(), [&](std::size_t r) {
    const auto& a = payloads_[refs[r]];
    for (std::size_t j = 0; j < payloads_.size(); ++j) {
      const double raw = raw_kernel(a, payloads_[j], config_);
      out(r, j) = norm ? combine(raw, self_[refs[r]], self_[j]) : raw;
    }
  });
  return out;
}

}  // namespace klsh
