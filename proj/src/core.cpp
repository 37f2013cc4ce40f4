#include "klsh/core.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

namespace klsh {

using nlohmann::json;

PayloadKind kind_of(const Payload& p) {
  return std::holds_alternative<DenseVector>(p) ? PayloadKind::Vector : PayloadKind::Tokens;
}

const char* to_string(PayloadKind k) { return k == PayloadKind::Vector ? "vector" : "tokens"; }
const char* to_string(Split s) { return s == Split::Train ? "train" : "test"; }

Dataset::Dataset(std::vector<DataPoint> points) : points_(std::move(points)) {
  if (points_.empty()) throw ValidationError("empty dataset");
  kind_ = kind_of(points_.front().payload);
  std::unordered_set<std::string> ids;
  const std::size_t dim =
      kind_ == PayloadKind::Vector ? std::get<DenseVector>(points_.front().payload).size() : 0;
  for (const auto& p : points_) {
    if (!ids.insert(p.id).second) throw ValidationError("duplicate id '" + p.id + "'");
    if (kind_of(p.payload) != kind_) throw ValidationError("mixed payload kinds");
    if (kind_ == PayloadKind::Vector && std::get<DenseVector>(p.payload).size() != dim)
      throw ValidationError("vector dimensionality mismatch at id '" + p.id + "'");
    if (p.label && *p.label != 0 && *p.label != 1)
      throw ValidationError("label must be 0 or 1 at id '" + p.id + "'");
  }
}

std::size_t Dataset::count(Split s) const {
  return static_cast<std::size_t>(
      std::count_if(points_.begin(), points_.end(), [s](const auto& p) { return p.split == s; }));
}

BitVector Dataset::test_indicator() const {
  BitVector x(points_.size());
  for (std::size_t i = 0; i < points_.size(); ++i) x.set(i, points_[i].split == Split::Test);
  return x;
}

void Dataset::require_train_and_test() const {
  if (count(Split::Train) == 0) throw ValidationError("dataset has no TRAIN points");
  if (count(Split::Test) == 0) throw ValidationError("dataset has no TEST points");
}

Dataset Dataset::with_splits(const std::vector<Split>& splits) const {
  if (splits.size() != points_.size()) throw ValidationError("split vector length mismatch");
  auto pts = points_;
  for (std::size_t i = 0; i < pts.size(); ++i) pts[i].split = splits[i];
  return Dataset(std::move(pts));
}

DataPoint parse_record(const std::string& line, std::size_t line_no) {
  auto fail = [line_no](const std::string& what) {
    throw ValidationError("malformed record at line " + std::to_string(line_no) + ": " + what);
  };
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    fail(e.what());
  }
  if (!j.is_object()) fail("not an object");
  for (const auto& [key, _] : j.items()) {
    if (key != "id" && key != "vector" && key != "tokens" && key != "split" && key != "label")
      fail("unknown field '" + key + "'");
  }
  DataPoint p;
  if (!j.contains("id") || !j["id"].is_string()) fail("missing string field 'id'");
  p.id = j["id"].get<std::string>();

  const bool has_vec = j.contains("vector");
  const bool has_tok = j.contains("tokens");
  if (has_vec == has_tok) fail("exactly one of 'vector' or 'tokens' required");
  if (has_vec) {
    const auto& v = j["vector"];
    if (!v.is_array()) fail("'vector' must be an array");
    DenseVector vec;
    vec.reserve(v.size());
    for (const auto& e : v) {
      if (!e.is_number()) fail("'vector' entries must be numbers");
      vec.push_back(e.get<double>());
      if (!std::isfinite(vec.back())) fail("'vector' entries must be finite");
    }
    p.payload = std::move(vec);
  } else {
    const auto& t = j["tokens"];
    if (!t.is_array()) fail("'tokens' must be an array");
    TokenSeq seq;
    seq.reserve(t.size());
    for (const auto& e : t) {
      if (!e.is_string()) fail("'tokens' entries must be strings");
      seq.push_back(e.get<std::string>());
    }
    p.payload = std::move(seq);
  }

  if (!j.contains("split") || !j["split"].is_string()) fail("missing string field 'split'");
  const auto split = j["split"].get<std::string>();
  if (split == "train")
    p.split = Split::Train;
  else if (split == "test")
    p.split = Split::Test;
  else
    fail("'split' must be \"train\" or \"test\"");

  if (j.contains("label")) {
    const auto& l = j["label"];
    if (!l.is_number_integer() || (l.get<int>() != 0 && l.get<int>() != 1))
      fail("'label' must be 0 or 1");
    p.label = l.get<int>();
  }
  return p;
}

std::string format_record(const DataPoint& p) {
  json j;
  j["id"] = p.id;
  if (const auto* v = std::get_if<DenseVector>(&p.payload))
    j["vector"] = *v;
  else
    j["tokens"] = std::get<TokenSeq>(p.payload);
  j["split"] = to_string(p.split);
  if (p.label) j["label"] = *p.label;
  return j.dump();
}

Dataset read_dataset(std::istream& in, std::optional<PayloadKind> expected_kind) {
  std::vector<DataPoint> points;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    points.push_back(parse_record(line, line_no));
  }
  Dataset ds(std::move(points));
  if (expected_kind && ds.kind() != *expected_kind)
    throw ValidationError(std::string("payload kind mismatch: expected ") +
                          to_string(*expected_kind) + ", found " + to_string(ds.kind()));
  return ds;
}

Dataset load_dataset(const std::string& path, std::optional<PayloadKind> expected_kind) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open dataset '" + path + "'");
  return read_dataset(in, expected_kind);
}

void write_dataset(std::ostream& out, const Dataset& ds) {
  for (const auto& p : ds.points()) out << format_record(p) << '\n';
}

void save_dataset(const std::string& path, const Dataset& ds) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  write_dataset(out, ds);
}

Dataset split_pseudo_test(const Dataset& ds, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw ValidationError("pseudo-test fraction must lie in (0,1)");
  if (ds.count(Split::Test) != 0)
    throw ValidationError("pseudo-test split requires all points to be TRAIN");
  const std::size_t n = ds.size();
  const auto n_test = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  if (n_test == 0 || n_test >= n)
    throw ValidationError("pseudo-test fraction leaves an empty TRAIN or TEST side");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (std::size_t i = 0; i < n_test; ++i) {
    const std::size_t j = i + uniform_index(rng, n - i);
    std::swap(order[i], order[j]);
  }
  std::vector<Split> splits(n, Split::Train);
  for (std::size_t i = 0; i < n_test; ++i) splits[order[i]] = Split::Test;
  return ds.with_splits(splits);
}

void HashcodeMatrix::insert_column(std::size_t pos, BitVector col) {
  if (col.size() != rows_) throw Error("column length does not match matrix rows");
  columns_.insert(columns_.begin() + static_cast<std::ptrdiff_t>(pos), std::move(col));
}

void HashcodeMatrix::erase_column(std::size_t pos) {
  columns_.erase(columns_.begin() + static_cast<std::ptrdiff_t>(pos));
}

BitVector HashcodeMatrix::row(std::size_t i) const {
  BitVector r(columns_.size());
  for (std::size_t l = 0; l < columns_.size(); ++l) r.set(l, columns_[l].get(i));
  return r;
}

std::uint64_t HashcodeMatrix::digest() const {
  std::uint64_t h = fnv1a(std::to_string(rows_) + "x" + std::to_string(cols()) + "\n");
  for (std::size_t i = 0; i < rows_; ++i) h = fnv1a(row_string(i) + "\n", h);
  return h;
}

}  // namespace klsh
