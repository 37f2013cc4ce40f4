#include "klsh/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>

#include "CLI11.hpp"
#include "klsh/classifier.hpp"
#include "klsh/clustering.hpp"
#include "klsh/model_io.hpp"
#include "klsh/optimizer.hpp"
#include "klsh/synth.hpp"

namespace klsh {

using nlohmann::json;

namespace {

struct GlobalOptions {
  std::uint64_t seed = 13;
  bool seed_given = false;
  unsigned threads = 0;
  bool verbose = false;
};

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::vector<BitVector> rows_of(const HashcodeMatrix& m) {
  std::vector<BitVector> rows;
  rows.reserve(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) rows.push_back(m.row(i));
  return rows;
}

json metrics_json(const Metrics& m) {
  return {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1},
          {"tp", m.tp},               {"fp", m.fp},         {"fn", m.fn},
          {"tn", m.tn}};
}

json cluster_table_json(const ClusterTable& t) {
  json arr = json::array();
  for (const auto& c : t.clusters)
    arr.push_back({{"id", c.id},
                   {"size", c.size()},
                   {"train_count", c.train_count},
                   {"test_count", c.test_count},
                   {"x_entropy", c.x_entropy}});
  return arr;
}

/// id -> label from line-delimited records carrying `id` and optionally
/// `label`. Other fields are ignored so dataset files can serve as gold.
std::vector<std::pair<std::string, int>> read_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::vector<std::pair<std::string, int>> out;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error&) {
      throw ValidationError(path + ": malformed record at line " + std::to_string(line_no));
    }
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string())
      throw ValidationError(path + ": record without id at line " + std::to_string(line_no));
    const auto id = j["id"].get<std::string>();
    if (!seen.insert(id).second) throw ValidationError(path + ": duplicate id '" + id + "'");
    if (!j.contains("label")) continue;
    const auto& l = j["label"];
    if (!l.is_number_integer() || (l.get<int>() != 0 && l.get<int>() != 1))
      throw ValidationError(path + ": label must be 0 or 1 at line " + std::to_string(line_no));
    out.emplace_back(id, l.get<int>());
  }
  return out;
}

Dataset force_split(const Dataset& ds, Split s) {
  return ds.with_splits(std::vector<Split>(ds.size(), s));
}

struct FitArgs {
  std::string train, test, config, out, report, debug_clusters;
  double pseudo_fraction = 0.0;
  bool random_construction = false;
};

int cmd_fit(const FitArgs& a, const GlobalOptions& g, std::ostream& diag) {
  LearnConfig config = learn_config_from_json(read_json_file(a.config));
  if (g.seed_given) config.seed = g.seed;

  const bool inductive = a.pseudo_fraction > 0.0;
  if (inductive == !a.test.empty())
    throw ValidationError("exactly one of --test or --pseudo-test-fraction is required");

  const auto kind = config.kernel.payload_kind();
  Dataset train = force_split(load_dataset(a.train, kind), Split::Train);
  Dataset merged;
  std::vector<std::string> pseudo_ids;
  if (inductive) {
    merged = split_pseudo_test(train, a.pseudo_fraction, config.seed);
    for (const auto& p : merged.points())
      if (p.split == Split::Test) pseudo_ids.push_back(p.id);
  } else {
    const Dataset test = force_split(load_dataset(a.test, kind), Split::Test);
    auto pts = train.points();
    pts.insert(pts.end(), test.points().begin(), test.points().end());
    merged = Dataset(std::move(pts));
  }

  const LearnResult res =
      a.random_construction ? learn_random(merged, config) : learn(merged, config);
  if (res.truncated) diag << "warning: " << res.warning << '\n';

  ModelFile model;
  model.ensemble = res.ensemble;
  model.learn_config = config;
  if (res.truncated) model.truncation_warning = res.warning;
  model.pseudo_test_ids = pseudo_ids;
  save_model(a.out, model);

  json steps = json::array();
  for (const auto& s : res.trace) {
    json j{{"step", s.step},
           {"scope", to_string(s.scope)},
           {"alpha", s.alpha},
           {"score", s.score},
           {"deleted_birth_steps", s.deleted_birth_steps},
           {"ensemble_size", s.ensemble_size},
           {"fell_back_to_global", s.fell_back_to_global},
           {"model_fallback", s.model_fallback}};
    j["cluster_id"] = s.cluster_id.empty() ? json() : json(s.cluster_id);
    j["threshold"] = s.threshold ? json(*s.threshold) : json();
    steps.push_back(std::move(j));
  }
  json objective_values = json::array();
  for (const auto& f : res.ensemble.functions) objective_values.push_back(f.objective_value);

  json report;
  report["mode"] = inductive ? "inductive" : "transductive";
  report["construction"] = a.random_construction ? "random" : "optimized";
  report["n_points"] = merged.size();
  report["n_train"] = merged.count(Split::Train);
  report["n_test"] = merged.count(Split::Test);
  report["n_functions"] = res.ensemble.size();
  report["steps"] = std::move(steps);
  report["objective_values"] = std::move(objective_values);
  report["matrix_digest"] = hex64(res.matrix.digest());
  report["truncated"] = res.truncated;
  report["warning"] = res.truncated ? json(res.warning) : json();

  const auto zeta = static_cast<std::size_t>(config.zeta);
  if (res.matrix.cols() >= zeta) {
    const auto table = assign_clusters(res.matrix, zeta, merged.test_indicator());
    double weighted = 0.0;
    for (const auto& c : table.clusters)
      weighted += static_cast<double>(c.size()) * c.x_entropy;
    weighted /= static_cast<double>(merged.size());
    report["clusters"] = {{"count", table.clusters.size()},
                          {"weighted_x_entropy", weighted}};
    if (!a.debug_clusters.empty())
      write_text_file(a.debug_clusters, canonical_dump(cluster_table_json(table)));
  } else {
    report["clusters"] = json();
  }
  write_text_file(a.report.empty() ? a.out + ".report.json" : a.report, canonical_dump(report));

  diag << "fit: " << res.ensemble.size() << " hash functions over " << merged.size()
       << " points (" << report["mode"].get<std::string>() << ")\n";
  return kExitOk;
}

struct TransformArgs {
  std::string model, data, out;
};

int cmd_transform(const TransformArgs& a, const GlobalOptions&, std::ostream& diag) {
  const ModelFile model = load_model(a.model);
  const Dataset data = load_dataset(a.data, model.ensemble.kernel.payload_kind());
  const HashcodeMatrix codes = hash_all(model.ensemble, data);
  std::ofstream out(a.out, std::ios::binary);
  if (!out) throw Error("cannot write '" + a.out + "'");
  for (std::size_t i = 0; i < data.size(); ++i)
    out << json{{"id", data[i].id}, {"bits", codes.row_string(i)}}.dump() << '\n';
  diag << "transform: " << data.size() << " codes of length " << codes.cols() << '\n';
  return kExitOk;
}

struct ClassifyArgs {
  std::string model, train, eval, out, metrics, forest_out;
  std::string classifier = "rf";
  int trees = 100;
  int max_depth = 8;
  double feature_subsample = 0.0;
  int k = 1;
  bool include_pseudo_test = false;
};

int cmd_classify(const ClassifyArgs& a, const GlobalOptions& g, std::ostream& diag) {
  if (a.classifier != "rf" && a.classifier != "knn")
    throw ValidationError("--classifier must be rf or knn");
  const ModelFile model = load_model(a.model);
  const auto kind = model.ensemble.kernel.payload_kind();
  const Dataset train = load_dataset(a.train, kind);
  const Dataset eval = load_dataset(a.eval, kind);

  const std::set<std::string> pseudo(model.pseudo_test_ids.begin(), model.pseudo_test_ids.end());
  const HashcodeMatrix train_codes = hash_all(model.ensemble, train);
  std::vector<BitVector> x;
  std::vector<int> y;
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto& p = train[i];
    if (p.split != Split::Train || !p.label) continue;
    if (!a.include_pseudo_test && pseudo.count(p.id)) continue;
    x.push_back(train_codes.row(i));
    y.push_back(*p.label);
  }
  if (x.empty()) throw ValidationError("--train has no labeled TRAIN points");

  const auto eval_rows = rows_of(hash_all(model.ensemble, eval));
  std::vector<int> predicted;
  if (a.classifier == "rf") {
    ForestConfig fc;
    fc.R = a.trees;
    fc.max_depth = a.max_depth;
    fc.feature_subsample = a.feature_subsample;
    fc.seed = g.seed;
    const Forest forest = train_forest(x, y, fc);
    predicted = predict_forest(forest, eval_rows);
    if (!a.forest_out.empty()) {
      json f{{"format_version", kModelFormatVersion},
             {"config", to_json(fc)},
             {"forest", to_json(forest)}};
      write_text_file(a.forest_out, canonical_dump(f));
    }
  } else {
    for (const auto& r : eval_rows) predicted.push_back(knn_hamming(x, y, r, a.k));
  }

  std::ofstream out(a.out, std::ios::binary);
  if (!out) throw Error("cannot write '" + a.out + "'");
  std::vector<int> pred_labeled, gold;
  for (std::size_t i = 0; i < eval.size(); ++i) {
    out << json{{"id", eval[i].id}, {"label", predicted[i]}}.dump() << '\n';
    if (eval[i].label) {
      pred_labeled.push_back(predicted[i]);
      gold.push_back(*eval[i].label);
    }
  }
  out.close();

  json report{{"classifier", a.classifier},
              {"n_train", x.size()},
              {"n_eval", eval.size()},
              {"n_scored", gold.size()}};
  if (!gold.empty()) {
    const Metrics m = evaluate(pred_labeled, gold);
    report["metrics"] = metrics_json(m);
    diag << "classify: P=" << m.precision << " R=" << m.recall << " F1=" << m.f1 << '\n';
  } else {
    report["metrics"] = json();
    diag << "classify: eval set has no gold labels; metrics skipped\n";
  }
  write_text_file(a.metrics.empty() ? a.out + ".metrics.json" : a.metrics, canonical_dump(report));
  return kExitOk;
}

struct EvalArgs {
  std::string pred, gold, out;
};

int cmd_eval(const EvalArgs& a, const GlobalOptions&, std::ostream& diag) {
  const auto pred = read_labels(a.pred);
  const auto gold_list = read_labels(a.gold);
  const std::map<std::string, int> gold(gold_list.begin(), gold_list.end());
  std::vector<int> p, gvec;
  for (const auto& [id, label] : pred) {
    auto it = gold.find(id);
    if (it == gold.end()) continue;
    p.push_back(label);
    gvec.push_back(it->second);
  }
  if (p.empty()) throw ValidationError("prediction and gold files share no labeled ids");
  const Metrics m = evaluate(p, gvec);
  json report = metrics_json(m);
  report["n"] = p.size();
  if (a.out.empty())
    std::cout << canonical_dump(report);
  else
    write_text_file(a.out, canonical_dump(report));
  diag << "eval: n=" << p.size() << " P=" << m.precision << " R=" << m.recall << " F1=" << m.f1
       << '\n';
  return kExitOk;
}

struct SynthArgs {
  std::string config, out;
};

int cmd_synth(const SynthArgs& a, const GlobalOptions& g, std::ostream& diag) {
  SynthConfig config = synth_config_from_json(read_json_file(a.config));
  if (g.seed_given) config.seed = g.seed;
  const SynthOutput out = synth_generate(config);
  save_synth(a.out, out, config);
  diag << "synth: wrote " << out.dataset.size() << " points to " << a.out << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& diag) {
  CLI::App app{"Nearly-unsupervised kernelized hashcode learning"};
  app.require_subcommand(1);
  GlobalOptions g;
  auto* seed_opt = app.add_option("--seed", g.seed, "Master seed (default 13)");
  app.add_option("--threads", g.threads, "Worker threads (default: all cores)")
      ->check(CLI::PositiveNumber);
  app.add_flag("--verbose", g.verbose, "Verbose diagnostics");

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Learn a hash ensemble");
  fit_cmd->add_option("--train", fit.train, "Training dataset")->required();
  auto* test_opt = fit_cmd->add_option("--test", fit.test, "Test dataset (transductive mode)");
  auto* frac_opt = fit_cmd->add_option("--pseudo-test-fraction", fit.pseudo_fraction,
                                       "Fraction of training points held out as pseudo-test");
  test_opt->excludes(frac_opt);
  fit_cmd->add_option("--config", fit.config, "Learn config (JSON)")->required();
  fit_cmd->add_option("--out", fit.out, "Model file")->required();
  fit_cmd->add_option("--report", fit.report, "Fit report (default <out>.report.json)");
  fit_cmd->add_option("--debug-clusters", fit.debug_clusters, "Write the final cluster table");
  fit_cmd->add_flag("--random-construction", fit.random_construction,
                    "Random subsets and splits instead of optimization (baseline)");

  TransformArgs tr;
  auto* tr_cmd = app.add_subcommand("transform", "Hash a dataset with a fitted model");
  tr_cmd->add_option("--model", tr.model)->required();
  tr_cmd->add_option("--data", tr.data)->required();
  tr_cmd->add_option("--out", tr.out)->required();

  ClassifyArgs cl;
  auto* cl_cmd = app.add_subcommand("classify", "Train a classifier on hashcodes and predict");
  cl_cmd->add_option("--model", cl.model)->required();
  cl_cmd->add_option("--train", cl.train)->required();
  cl_cmd->add_option("--eval", cl.eval)->required();
  cl_cmd->add_option("--out", cl.out, "Predictions file")->required();
  cl_cmd->add_option("--metrics", cl.metrics, "Metrics report (default <out>.metrics.json)");
  cl_cmd->add_option("--classifier", cl.classifier, "rf or knn (default rf)");
  cl_cmd->add_option("--trees", cl.trees, "Random forest size R");
  cl_cmd->add_option("--max-depth", cl.max_depth);
  cl_cmd->add_option("--feature-subsample", cl.feature_subsample);
  cl_cmd->add_option("--k", cl.k, "Neighbours for knn");
  cl_cmd->add_option("--forest-out", cl.forest_out, "Write the trained forest");
  cl_cmd->add_flag("--include-pseudo-test", cl.include_pseudo_test,
                   "Train on pseudo-test points too");

  EvalArgs ev;
  auto* ev_cmd = app.add_subcommand("eval", "Score predictions against gold labels");
  ev_cmd->add_option("--pred", ev.pred)->required();
  ev_cmd->add_option("--gold", ev.gold)->required();
  ev_cmd->add_option("--out", ev.out, "Metrics report (default: stdout)");

  SynthArgs sy;
  auto* sy_cmd = app.add_subcommand("synth", "Generate a synthetic dataset");
  sy_cmd->add_option("--config", sy.config)->required();
  sy_cmd->add_option("--out", sy.out)->required();

  std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
  try {
    app.parse(std::move(rev));
  } catch (const CLI::CallForHelp& e) {
    diag << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    diag << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  g.seed_given = seed_opt->count() > 0;
  set_thread_count(g.threads);

  try {
    if (fit_cmd->parsed()) return cmd_fit(fit, g, diag);
    if (tr_cmd->parsed()) return cmd_transform(tr, g, diag);
    if (cl_cmd->parsed()) return cmd_classify(cl, g, diag);
    if (ev_cmd->parsed()) return cmd_eval(ev, g, diag);
    if (sy_cmd->parsed()) return cmd_synth(sy, g, diag);
  } catch (const ValidationError& e) {
    diag << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    diag << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace klsh
