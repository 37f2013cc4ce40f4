#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "klsh/core.hpp"

namespace klsh {

enum class KernelKind { Rbf, Cosine, Subseq };

const char* to_string(KernelKind k);
KernelKind kernel_kind_from_string(const std::string& s);

struct KernelConfig {
  KernelKind kind = KernelKind::Rbf;
  double gamma = 0.5;    // RBF width: exp(-gamma * |a-b|^2)
  double lambda = 0.5;   // subsequence gap decay
  int max_len = 2;       // longest common subsequence length counted
  bool normalize = true;

  /// Throws ValidationError naming the offending field.
  void validate() const;
  PayloadKind payload_kind() const {
    return kind == KernelKind::Subseq ? PayloadKind::Tokens : PayloadKind::Vector;
  }

  friend bool operator==(const KernelConfig&, const KernelConfig&) = default;
};

/// Unnormalized gap-weighted subsequence kernel: sum over common subsequences
/// u with 1 <= |u| <= max_len of lambda^(span in a) * lambda^(span in b),
/// over all occurrence pairs.
double subsequence_kernel(const TokenSeq& a, const TokenSeq& b, double lambda, int max_len);

/// Similarity between two payloads. COSINE is the cosine of the angle (already
/// normalized); SUBSEQ is normalized by self-similarities when config.normalize.
double kernel_eval(const Payload& a, const Payload& b, const KernelConfig& config);

/// Unnormalized self-similarity K(a,a), used for normalization.
double self_similarity(const Payload& a, const KernelConfig& config);

/// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
};

/// Entry (i,j) = kernel_eval(points[i], queries[j]). Self-similarities are
/// computed once per payload; rows may be filled concurrently.
Matrix gram(std::span<const Payload> points, std::span<const Payload> queries,
            const KernelConfig& config);

/// Caches self-similarities of a fixed payload set so repeated similarity
/// blocks against it (one per sampled reference subset) avoid recomputation.
class KernelCache {
 public:
  KernelCache(std::span<const Payload> payloads, const KernelConfig& config);

  const KernelConfig& config() const { return config_; }
  std::size_t size() const { return payloads_.size(); }
  const Payload& payload(std::size_t i) const { return payloads_[i]; }

  /// refs.size() x N block of similarities between payloads[refs[r]] and every
  /// payload.
  Matrix block(std::span<const std::size_t> refs) const;

 private:
  std::span<const Payload> payloads_;
  KernelConfig config_;
  std::vector<double> self_;
};

}  // namespace klsh
