#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "klsh/core.hpp"
#include "klsh/kernels.hpp"

namespace klsh {

enum class HashModelKind { Rknn, MaxMargin };
enum class Scope { Global, Local };

const char* to_string(HashModelKind k);
HashModelKind hash_model_from_string(const std::string& s);
const char* to_string(Scope s);

/// Random k-nearest-references rule.
struct RknnModel {
  int k = 1;
  friend bool operator==(const RknnModel&, const RknnModel&) = default;
};

/// Kernel-space linear separator over the references, fitted by a dual
/// perceptron in the orientation where z[0] = 1. `negated` marks a function
/// stored for the complementary split; its coefficients and bias are the
/// negation of the canonical fit and its tie rule flips with them, so the
/// two orientations produce exactly complementary bits.
struct MaxMarginModel {
  std::vector<double> coefficients;
  double bias = 0.0;
  bool negated = false;
  friend bool operator==(const MaxMarginModel&, const MaxMarginModel&) = default;
};

// New hash models (e.g. neural) are added as further alternatives here, with
// a matching branch in predict_bit.
using HashModel = std::variant<RknnModel, MaxMarginModel>;

using SplitBits = std::vector<std::uint8_t>;

/// True when z contains both 0 and 1.
bool nontrivial(const SplitBits& z);

struct HashFunction {
  std::vector<std::string> ref_ids;
  std::vector<Payload> refs;
  SplitBits z;
  HashModel model;
  /// MAXMARGIN was requested but the split was not separable; RKNN is used.
  bool fallback = false;
  double objective_value = 0.0;
  Scope scope = Scope::Global;
  int birth_step = 0;

  std::size_t alpha() const { return z.size(); }
  friend bool operator==(const HashFunction&, const HashFunction&) = default;
};

/// Dual kernel perceptron on a precomputed alpha x alpha reference Gram
/// matrix. Returns nullopt when the split is not separated within max_epochs.
std::optional<MaxMarginModel> fit_dual_perceptron(const Matrix& ref_gram, const SplitBits& z,
                                                  int max_epochs = 200);

/// Builds a hash function from references, split and kernel.
/// Throws ValidationError on a trivial split, alpha < 2, or an invalid k.
HashFunction fit_hash_function(std::vector<std::string> ref_ids, std::vector<Payload> refs,
                               SplitBits z, const KernelConfig& kernel, HashModelKind kind,
                               int k = 1);

/// Same, reusing an already computed reference Gram matrix.
HashFunction fit_hash_function(std::vector<std::string> ref_ids, std::vector<Payload> refs,
                               SplitBits z, const Matrix& ref_gram, HashModelKind kind, int k);

/// Bit for a point given its similarities to the function's references.
///   RKNN k=1: 1 iff the best z=1 similarity strictly beats the best z=0 one.
///   RKNN k>1: majority z among the k most similar references, similarity
///             ties broken by lower reference index.
///   MAXMARGIN: sum coeff*K + bias > 0 (>= 0 for a negated function).
bool predict_bit(const HashModel& model, const SplitBits& z, std::span<const double> sims);

bool hash_point(const HashFunction& h, const Payload& p, const KernelConfig& kernel);

struct HashEnsemble {
  std::vector<HashFunction> functions;
  KernelConfig kernel;
  int zeta = 1;

  std::size_t size() const { return functions.size(); }
  std::size_t global_count() const;
  /// Union of reference payloads keyed by id.
  std::map<std::string, Payload> reference_points() const;
};

/// Column l of row i is hash_point(functions[l], point i).
HashcodeMatrix hash_all(const HashEnsemble& ensemble, const Dataset& dataset);
HashcodeMatrix hash_all(const HashEnsemble& ensemble, std::span<const Payload> payloads);

/// Column for one function over payloads (similarities computed in parallel).
BitVector hash_column(const HashFunction& h, std::span<const Payload> payloads,
                      const KernelConfig& kernel);

}  // namespace klsh
