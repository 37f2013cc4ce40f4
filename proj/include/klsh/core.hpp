#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "klsh/common.hpp"

namespace klsh {

enum class Split { Train, Test };
enum class PayloadKind { Vector, Tokens };

using DenseVector = std::vector<double>;
using TokenSeq = std::vector<std::string>;
using Payload = std::variant<DenseVector, TokenSeq>;

PayloadKind kind_of(const Payload& p);
const char* to_string(PayloadKind k);
const char* to_string(Split s);

struct DataPoint {
  std::string id;
  Payload payload;
  Split split = Split::Train;
  std::optional<int> label;  // 0 or 1

  friend bool operator==(const DataPoint&, const DataPoint&) = default;
};

/// Ordered, validated collection of points sharing one payload kind.
class Dataset {
 public:
  Dataset() = default;
  /// Validates the invariants: unique ids, uniform kind, shared vector
  /// dimensionality, labels in {0,1}.
  explicit Dataset(std::vector<DataPoint> points);

  const std::vector<DataPoint>& points() const { return points_; }
  const DataPoint& operator[](std::size_t i) const { return points_[i]; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  PayloadKind kind() const { return kind_; }

  std::size_t count(Split s) const;
  /// x indicator: bit i set iff point i is TEST.
  BitVector test_indicator() const;
  /// Throws ValidationError unless both TRAIN and TEST points are present.
  void require_train_and_test() const;

  Dataset with_splits(const std::vector<Split>& splits) const;

 private:
  std::vector<DataPoint> points_;
  PayloadKind kind_ = PayloadKind::Vector;
};

/// Parses one dataset record (a single-line JSON object). `line_no` only
/// feeds error messages.
DataPoint parse_record(const std::string& line, std::size_t line_no = 0);
/// Canonical one-line record; field order normalized.
std::string format_record(const DataPoint& p);

Dataset read_dataset(std::istream& in, std::optional<PayloadKind> expected_kind = std::nullopt);
Dataset load_dataset(const std::string& path,
                     std::optional<PayloadKind> expected_kind = std::nullopt);
void write_dataset(std::ostream& out, const Dataset& ds);
void save_dataset(const std::string& path, const Dataset& ds);

/// Re-marks round(fraction * N) TRAIN points as TEST using a seeded shuffle.
/// Every point must currently be TRAIN.
Dataset split_pseudo_test(const Dataset& ds, double fraction, std::uint64_t seed);

/// Bit matrix of hashcodes, N rows by H columns, stored column-wise.
class HashcodeMatrix {
 public:
  HashcodeMatrix() = default;
  explicit HashcodeMatrix(std::size_t rows) : rows_(rows) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return columns_.size(); }

  const BitVector& column(std::size_t l) const { return columns_[l]; }
  const std::vector<BitVector>& columns() const { return columns_; }
  bool bit(std::size_t i, std::size_t l) const { return columns_[l].get(i); }

  void insert_column(std::size_t pos, BitVector col);
  void append_column(BitVector col) { insert_column(columns_.size(), std::move(col)); }
  void erase_column(std::size_t pos);

  /// Hashcode of point i, one bit per column in column order.
  BitVector row(std::size_t i) const;
  std::string row_string(std::size_t i) const { return row(i).to_string(); }

  /// Order-sensitive content digest (FNV-1a over the row strings).
  std::uint64_t digest() const;

  friend bool operator==(const HashcodeMatrix&, const HashcodeMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::vector<BitVector> columns_;
};

}  // namespace klsh
