#include "klsh/model_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace klsh {

using nlohmann::json;

namespace {

void dump_value(const json& j, std::string& out, int indent) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += inner + json(it.key()).dump() + ": ";
        dump_value(it.value(), out, indent + 1);
      }
      out += "\n" + pad + "}";
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // Arrays of scalars stay on one line.
      const bool flat = std::all_of(j.begin(), j.end(), [](const json& e) {
        return !e.is_object() && !e.is_array();
      });
      out += flat ? "[" : "[\n";
      bool first = true;
      for (const auto& e : j) {
        if (!first) out += flat ? ", " : ",\n";
        first = false;
        if (!flat) out += inner;
        dump_value(e, out, indent + 1);
      }
      out += flat ? "]" : "\n" + pad + "]";
      return;
    }
    case json::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v)) throw Error("cannot serialize a non-finite number");
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      std::string s(buf);
      if (s.find_first_of(".eE") == std::string::npos) s += ".0";
      out += s;
      return;
    }
    default:
      out += j.dump();
  }
}

/// Reads fields from a JSON object and rejects any it did not consume.
class FieldReader {
 public:
  FieldReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ValidationError(where_ + ": expected an object");
  }

  template <class T>
  void opt(const char* key, T& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ValidationError(where_ + "." + key + ": wrong type");
    }
  }

  const json* sub(const char* key) {
    if (!j_.contains(key)) return nullptr;
    seen_.insert(key);
    return &j_.at(key);
  }

  void finish() const {
    for (const auto& [key, _] : j_.items())
      if (!seen_.count(key)) throw ValidationError(where_ + "." + key + ": unknown field");
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

std::string bits_string(const SplitBits& z) {
  std::string s;
  for (auto b : z) s += b ? '1' : '0';
  return s;
}

SplitBits bits_from_string(const std::string& s) {
  SplitBits z;
  for (char c : s) {
    if (c != '0' && c != '1') throw ValidationError("model: split bits must be 0/1 characters");
    z.push_back(c == '1');
  }
  return z;
}

json function_to_json(const HashFunction& f) {
  json j;
  j["ref_ids"] = f.ref_ids;
  j["z"] = bits_string(f.z);
  json m;
  if (const auto* rk = std::get_if<RknnModel>(&f.model)) {
    m["kind"] = "rknn";
    m["k"] = rk->k;
  } else {
    const auto& mm = std::get<MaxMarginModel>(f.model);
    m["kind"] = "maxmargin";
    m["coefficients"] = mm.coefficients;
    m["bias"] = mm.bias;
    m["negated"] = mm.negated;
  }
  j["model"] = std::move(m);
  j["fallback"] = f.fallback;
  j["objective_value"] = f.objective_value;
  j["scope"] = to_string(f.scope);
  j["birth_step"] = f.birth_step;
  return j;
}

HashFunction function_from_json(const json& j, const std::map<std::string, Payload>& pool) {
  HashFunction f;
  FieldReader r(j, "function");
  r.opt("ref_ids", f.ref_ids);
  std::string z;
  r.opt("z", z);
  f.z = bits_from_string(z);
  r.opt("fallback", f.fallback);
  r.opt("objective_value", f.objective_value);
  std::string scope = "global";
  r.opt("scope", scope);
  if (scope == "global")
    f.scope = Scope::Global;
  else if (scope == "local")
    f.scope = Scope::Local;
  else
    throw ValidationError("function.scope: unknown scope '" + scope + "'");
  r.opt("birth_step", f.birth_step);
  const json* m = r.sub("model");
  if (m == nullptr) throw ValidationError("function.model: missing");
  r.finish();

  FieldReader mr(*m, "function.model");
  std::string kind;
  mr.opt("kind", kind);
  if (kind == "rknn") {
    RknnModel rk;
    mr.opt("k", rk.k);
    if (rk.k < 1 || rk.k % 2 == 0 || static_cast<std::size_t>(rk.k) > f.z.size())
      throw ValidationError("function.model.k: invalid");
    f.model = rk;
  } else if (kind == "maxmargin") {
    MaxMarginModel mm;
    mr.opt("coefficients", mm.coefficients);
    mr.opt("bias", mm.bias);
    mr.opt("negated", mm.negated);
    if (mm.coefficients.size() != f.z.size())
      throw ValidationError("function.model.coefficients: length mismatch");
    f.model = std::move(mm);
  } else {
    throw ValidationError("function.model.kind: unknown kind '" + kind + "'");
  }
  mr.finish();

  if (f.ref_ids.size() != f.z.size() || f.z.size() < 2 || !nontrivial(f.z))
    throw ValidationError("function: invalid reference split");
  for (const auto& id : f.ref_ids) {
    auto it = pool.find(id);
    if (it == pool.end()) throw ValidationError("model: unresolved reference id '" + id + "'");
    f.refs.push_back(it->second);
  }
  return f;
}

}  // namespace

std::string canonical_dump(const json& j) {
  std::string out;
  dump_value(j, out, 0);
  out += '\n';
  return out;
}

json payload_to_json(const Payload& p) {
  json j;
  if (const auto* v = std::get_if<DenseVector>(&p))
    j["vector"] = *v;
  else
    j["tokens"] = std::get<TokenSeq>(p);
  return j;
}

Payload payload_from_json(const json& j) {
  FieldReader r(j, "payload");
  if (j.contains("vector")) {
    DenseVector v;
    r.opt("vector", v);
    r.finish();
    return v;
  }
  TokenSeq t;
  r.opt("tokens", t);
  r.finish();
  if (!j.contains("tokens")) throw ValidationError("payload: needs 'vector' or 'tokens'");
  return t;
}

json to_json(const KernelConfig& c) {
  return {{"kind", to_string(c.kind)},
          {"gamma", c.gamma},
          {"lambda", c.lambda},
          {"max_len", c.max_len},
          {"normalize", c.normalize}};
}

KernelConfig kernel_config_from_json(const json& j) {
  KernelConfig c;
  FieldReader r(j, "kernel");
  std::string kind = to_string(c.kind);
  r.opt("kind", kind);
  c.kind = kernel_kind_from_string(kind);
  r.opt("gamma", c.gamma);
  r.opt("lambda", c.lambda);
  r.opt("max_len", c.max_len);
  r.opt("normalize", c.normalize);
  r.finish();
  c.validate();
  return c;
}

json to_json(const LearnConfig& c) {
  json j;
  j["H"] = c.H;
  j["alpha_set"] = c.alpha_set;
  j["zeta"] = c.zeta;
  j["kernel"] = to_json(c.kernel);
  j["model_kind"] = to_string(c.model_kind);
  j["k"] = c.k;
  j["redundancy_mode"] = to_string(c.redundancy_mode);
  j["w_mi"] = c.w_mi;
  j["w_y"] = c.w_y;
  j["search"] = to_string(c.search);
  j["anneal"] = {{"budget", c.anneal.budget}, {"t0", c.anneal.t0}, {"cool", c.anneal.cool}};
  j["brute_force_max_alpha"] = c.brute_force_max_alpha;
  j["deletion"] = {{"enabled", c.deletion.enabled},
                   {"kappa", c.deletion.kappa},
                   {"max_per_step", c.deletion.max_per_step},
                   {"protect_global", c.deletion.protect_global}};
  j["max_iterations"] = c.max_iterations;
  j["seed"] = c.seed;
  return j;
}

LearnConfig learn_config_from_json(const json& j) {
  LearnConfig c;
  FieldReader r(j, "config");
  r.opt("H", c.H);
  r.opt("alpha_set", c.alpha_set);
  r.opt("zeta", c.zeta);
  if (const json* k = r.sub("kernel")) c.kernel = kernel_config_from_json(*k);
  std::string s = to_string(c.model_kind);
  r.opt("model_kind", s);
  c.model_kind = hash_model_from_string(s);
  r.opt("k", c.k);
  s = to_string(c.redundancy_mode);
  r.opt("redundancy_mode", s);
  c.redundancy_mode = redundancy_mode_from_string(s);
  r.opt("w_mi", c.w_mi);
  r.opt("w_y", c.w_y);
  s = to_string(c.search);
  r.opt("search", s);
  c.search = search_kind_from_string(s);
  if (const json* a = r.sub("anneal")) {
    FieldReader ar(*a, "config.anneal");
    ar.opt("budget", c.anneal.budget);
    ar.opt("t0", c.anneal.t0);
    ar.opt("cool", c.anneal.cool);
    ar.finish();
  }
  r.opt("brute_force_max_alpha", c.brute_force_max_alpha);
  if (const json* d = r.sub("deletion")) {
    FieldReader dr(*d, "config.deletion");
    dr.opt("enabled", c.deletion.enabled);
    dr.opt("kappa", c.deletion.kappa);
    dr.opt("max_per_step", c.deletion.max_per_step);
    dr.opt("protect_global", c.deletion.protect_global);
    dr.finish();
  }
  r.opt("max_iterations", c.max_iterations);
  r.opt("seed", c.seed);
  r.finish();
  c.validate();
  return c;
}

json to_json(const ForestConfig& c) {
  return {{"R", c.R},
          {"max_depth", c.max_depth},
          {"feature_subsample", c.feature_subsample},
          {"bootstrap", c.bootstrap},
          {"seed", c.seed}};
}

ForestConfig forest_config_from_json(const json& j) {
  ForestConfig c;
  FieldReader r(j, "forest");
  r.opt("R", c.R);
  r.opt("max_depth", c.max_depth);
  r.opt("feature_subsample", c.feature_subsample);
  r.opt("bootstrap", c.bootstrap);
  r.opt("seed", c.seed);
  r.finish();
  c.validate();
  return c;
}

json to_json(const SynthConfig& c) {
  return {{"mode", c.mode == SynthMode::VectorGmm ? "vector_gmm" : "token_grammar"},
          {"n_train", c.n_train},
          {"n_test", c.n_test},
          {"n_clusters", c.n_clusters},
          {"dim", c.dim},
          {"cluster_spread", c.cluster_spread},
          {"shift", c.shift},
          {"label_rule", c.label_rule == LabelRule::ClusterParity ? "cluster_parity" : "hyperplane"},
          {"label_noise", c.label_noise},
          {"vocab_size", c.vocab_size},
          {"seq_len", c.seq_len},
          {"drift", c.drift},
          {"seed", c.seed}};
}

SynthConfig synth_config_from_json(const json& j) {
  SynthConfig c;
  FieldReader r(j, "synth");
  std::string mode = "vector_gmm";
  r.opt("mode", mode);
  if (mode == "vector_gmm")
    c.mode = SynthMode::VectorGmm;
  else if (mode == "token_grammar")
    c.mode = SynthMode::TokenGrammar;
  else
    throw ValidationError("synth.mode: unknown mode '" + mode + "'");
  r.opt("n_train", c.n_train);
  r.opt("n_test", c.n_test);
  r.opt("n_clusters", c.n_clusters);
  r.opt("dim", c.dim);
  r.opt("cluster_spread", c.cluster_spread);
  r.opt("shift", c.shift);
  std::string rule = "cluster_parity";
  r.opt("label_rule", rule);
  if (rule == "cluster_parity")
    c.label_rule = LabelRule::ClusterParity;
  else if (rule == "hyperplane")
    c.label_rule = LabelRule::Hyperplane;
  else
    throw ValidationError("synth.label_rule: unknown rule '" + rule + "'");
  r.opt("label_noise", c.label_noise);
  r.opt("vocab_size", c.vocab_size);
  r.opt("seq_len", c.seq_len);
  r.opt("drift", c.drift);
  r.opt("seed", c.seed);
  r.finish();
  c.validate();
  return c;
}

json to_json(const Forest& f) {
  json trees = json::array();
  for (const auto& t : f.trees) {
    // Node rows: [feature, left, right, count0, count1].
    json nodes = json::array();
    for (const auto& n : t.nodes) nodes.push_back({n.feature, n.left, n.right, n.count0, n.count1});
    trees.push_back(std::move(nodes));
  }
  return {{"code_length", f.code_length}, {"trees", std::move(trees)}};
}

Forest forest_from_json(const json& j) {
  Forest f;
  FieldReader r(j, "forest");
  r.opt("code_length", f.code_length);
  const json* trees = r.sub("trees");
  r.finish();
  if (trees == nullptr || !trees->is_array()) throw ValidationError("forest.trees: missing");
  for (const auto& t : *trees) {
    Tree tree;
    for (const auto& n : t) {
      if (!n.is_array() || n.size() != 5) throw ValidationError("forest.trees: malformed node");
      TreeNode node{n[0].get<int>(), n[1].get<int>(), n[2].get<int>(), n[3].get<std::uint32_t>(),
                    n[4].get<std::uint32_t>()};
      tree.nodes.push_back(node);
    }
    const auto count = static_cast<int>(tree.nodes.size());
    if (count == 0) throw ValidationError("forest.trees: empty tree");
    for (const auto& node : tree.nodes) {
      if (node.leaf()) continue;
      if (static_cast<std::size_t>(node.feature) >= f.code_length || node.left <= 0 ||
          node.right <= 0 || node.left >= count || node.right >= count)
        throw ValidationError("forest.trees: node out of range");
    }
    f.trees.push_back(std::move(tree));
  }
  return f;
}

std::string serialize_model(const ModelFile& model) {
  json j;
  j["format_version"] = model.format_version;
  j["kernel"] = to_json(model.ensemble.kernel);
  j["zeta"] = model.ensemble.zeta;
  json fns = json::array();
  for (const auto& f : model.ensemble.functions) fns.push_back(function_to_json(f));
  j["functions"] = std::move(fns);
  json pool = json::object();
  for (const auto& [id, payload] : model.ensemble.reference_points())
    pool[id] = payload_to_json(payload);
  j["reference_points"] = std::move(pool);
  j["learn_config"] = to_json(model.learn_config);
  j["truncation_warning"] = model.truncation_warning ? json(*model.truncation_warning) : json();
  j["forest"] = model.forest ? to_json(*model.forest) : json();
  j["pseudo_test_ids"] = model.pseudo_test_ids;
  return canonical_dump(j);
}

ModelFile deserialize_model(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("model: ") + e.what());
  }
  ModelFile m;
  FieldReader r(j, "model");
  r.opt("format_version", m.format_version);
  if (m.format_version != kModelFormatVersion)
    throw ValidationError("model: unsupported format_version " + std::to_string(m.format_version));
  const json* kernel = r.sub("kernel");
  const json* fns = r.sub("functions");
  const json* pool = r.sub("reference_points");
  const json* learn = r.sub("learn_config");
  const json* warning = r.sub("truncation_warning");
  const json* forest = r.sub("forest");
  r.opt("zeta", m.ensemble.zeta);
  r.opt("pseudo_test_ids", m.pseudo_test_ids);
  r.finish();
  if (kernel == nullptr || fns == nullptr || pool == nullptr || learn == nullptr)
    throw ValidationError("model: missing required section");

  m.ensemble.kernel = kernel_config_from_json(*kernel);
  m.learn_config = learn_config_from_json(*learn);
  std::map<std::string, Payload> refs;
  if (!pool->is_object()) throw ValidationError("model.reference_points: expected an object");
  for (auto it = pool->begin(); it != pool->end(); ++it)
    refs.emplace(it.key(), payload_from_json(it.value()));
  for (const auto& [id, payload] : refs)
    if (kind_of(payload) != m.ensemble.kernel.payload_kind())
      throw ValidationError("model: reference '" + id + "' does not match the kernel");
  if (!fns->is_array()) throw ValidationError("model.functions: expected an array");
  for (const auto& f : *fns) m.ensemble.functions.push_back(function_from_json(f, refs));
  if (warning != nullptr && !warning->is_null()) m.truncation_warning = warning->get<std::string>();
  if (forest != nullptr && !forest->is_null()) m.forest = forest_from_json(*forest);
  return m;
}

ModelFile load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open model '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return deserialize_model(ss.str());
}

void save_model(const std::string& path, const ModelFile& model) {
  write_text_file(path, serialize_model(model));
}

json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("'" + path + "': " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
  if (!out) throw Error("write failed for '" + path + "'");
}

}  // namespace klsh
