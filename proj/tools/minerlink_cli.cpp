// minerlink: record-linkage pipeline driver.
//
//   ingest -> pairs -> label -> train -> predict -> evaluate / sweep / cluster
//   runtime
//
// Every stage reads the previous stages' artifacts from --output-dir and
// writes its own there atomically.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "minerlink/atomic_file.hpp"
#include "minerlink/classifier.hpp"
#include "minerlink/cluster.hpp"
#include "minerlink/error.hpp"
#include "minerlink/evaluate.hpp"
#include "minerlink/kernels.hpp"
#include "minerlink/llm_labeler.hpp"
#include "minerlink/matcher.hpp"
#include "minerlink/pairing.hpp"
#include "minerlink/records.hpp"
#include "minerlink/runtime_model.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace minerlink;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitTransport = 3;

struct DatasetSource {
  fs::path path;
  std::string source_id;
  SchemaConfig schema;
};

struct PipelineConfig {
  std::vector<DatasetSource> datasets;
  LabelerConfig labeler;
  RuleConfig rule;
  TrainHyper hyper;
  FeatureSpec feature_spec;
  SplitSpec split;
  fs::path output_dir = "minerlink-out";
  std::optional<double> max_distance_km;
  SweepConfig sweep;
  std::size_t max_cluster_size = 50;
};

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

PipelineConfig load_config(const std::optional<fs::path>& file) {
  PipelineConfig cfg;
  if (!file) return cfg;
  json j;
  try {
    j = json::parse(read_file(*file));
  } catch (const json::exception& e) {
    throw ConfigError("config: " + std::string(e.what()));
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  const fs::path base = file->parent_path();
  try {
    for (const auto& d : j.value("datasets", json::array())) {
      DatasetSource src;
      src.path = resolve(base, d.at("path").get<std::string>());
      src.source_id = d.at("source_id").get<std::string>();
      src.schema = SchemaConfig::from_json(d.value("schema", json::object()));
      cfg.datasets.push_back(std::move(src));
    }
    if (j.contains("labeler")) {
      cfg.labeler = LabelerConfig::from_json(j.at("labeler"));
      if (!cfg.labeler.cache_path.empty()) {
        cfg.labeler.cache_path = resolve(base, cfg.labeler.cache_path.string());
      }
    }
    if (j.contains("matcher")) {
      const auto& m = j.at("matcher");
      if (m.contains("rule")) cfg.rule = RuleConfig::from_json(m.at("rule"));
      if (m.contains("hyper")) cfg.hyper = TrainHyper::from_json(m.at("hyper"));
      if (m.contains("feature_spec")) cfg.feature_spec = FeatureSpec::from_json(m.at("feature_spec"));
    }
    if (j.contains("split")) {
      const auto& s = j.at("split");
      if (s.contains("fractions")) cfg.split.fractions = s.at("fractions").get<std::array<double, 3>>();
      cfg.split.seed = s.value("seed", cfg.split.seed);
      cfg.split.validate();
    }
    if (j.contains("output_dir")) cfg.output_dir = resolve(base, j.at("output_dir").get<std::string>());
    if (j.contains("max_distance_km") && !j.at("max_distance_km").is_null()) {
      cfg.max_distance_km = j.at("max_distance_km").get<double>();
    }
    if (j.contains("sweep")) {
      const auto& s = j.at("sweep");
      cfg.sweep.mode = sweep_mode_from_string(s.value("mode", std::string("BalancedGrowth")));
      cfg.sweep.grid = s.value("grid", std::vector<double>{});
      cfg.sweep.fixed_count = s.value("fixed_count", std::size_t{0});
    }
    if (j.contains("cluster")) {
      cfg.max_cluster_size = j.at("cluster").value("max_cluster_size", cfg.max_cluster_size);
    }
  } catch (const json::exception& e) {
    throw ConfigError("config: " + std::string(e.what()));
  }
  return cfg;
}

std::string jsonl(const std::vector<LabeledPair>& pairs) {
  std::ostringstream out;
  write_labeled_pairs(out, pairs);
  return out.str();
}

std::vector<LabeledPair> load_labeled(const fs::path& p) {
  std::istringstream in(read_file(p));
  return read_labeled_pairs(in);
}

std::vector<PairKey> load_keys(const fs::path& p) {
  std::istringstream in(read_file(p));
  return read_pair_keys(in);
}

RecordIndex load_records(const fs::path& p) {
  std::istringstream in(read_file(p));
  std::vector<Record> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      records.push_back(record_from_json(json::parse(line)));
    } catch (const json::parse_error& e) {
      throw DataError(p.string() + ": " + e.what());
    }
  }
  return RecordIndex(std::move(records));
}

void require_file(const fs::path& p) {
  if (!fs::exists(p)) throw ConfigError("missing input artifact " + p.string());
}

struct Run {
  PipelineConfig cfg;
  fs::path out;
  fs::path records_file() const { return out / "records.jsonl"; }
  fs::path pairs_file() const { return out / "pairs.jsonl"; }
  fs::path labeled_file() const { return out / "labeled.jsonl"; }
  fs::path model_file() const { return out / "model.json"; }
  fs::path predictions_file() const { return out / "predictions.jsonl"; }
};

// ---- ingest ---------------------------------------------------------------

int cmd_ingest(const Run& run) {
  if (run.cfg.datasets.empty()) throw ConfigError("ingest: no datasets configured");
  for (const auto& d : run.cfg.datasets) require_file(d.path);

  std::ostringstream records;
  json report = json::array();
  std::vector<Dataset> loaded;
  for (const auto& src : run.cfg.datasets) {
    auto d = ingest_csv(src.path, src.source_id, src.schema);
    const auto v = validate_dataset(d);
    report.push_back({{"source_id", d.source_id},
                      {"records", v.record_count},
                      {"missing_location", v.missing_location},
                      {"duplicate_uris", v.duplicate_uris},
                      {"coordinate_warnings", d.coordinate_warnings},
                      {"errors", v.errors}});
    if (v.duplicate_uris > 0) {
      throw DataError("ingest: " + d.source_id + " has " + std::to_string(v.duplicate_uris) +
                      " duplicate uris (first: " + v.errors.front() + ")");
    }
    loaded.push_back(std::move(d));
  }
  const RecordIndex index(loaded);  // cross-dataset uniqueness
  for (const auto& r : index.records()) records << record_to_json(r).dump() << '\n';

  write_file_atomic(run.records_file(), records.str());
  write_file_atomic(run.out / "ingest_report.json", report.dump(2) + "\n");
  std::size_t warnings = 0;
  for (const auto& d : loaded) warnings += d.coordinate_warnings;
  std::printf("ingest: %zu records from %zu datasets, %zu coordinate warnings\n",
              index.size(), loaded.size(), warnings);
  return kExitOk;
}

// ---- pairs ----------------------------------------------------------------

int cmd_pairs(const Run& run) {
  require_file(run.records_file());
  const auto index = load_records(run.records_file());
  const auto keys = enumerate_pairs(index.records(), run.cfg.max_distance_km);
  std::ostringstream out;
  write_pair_keys(out, keys);
  write_file_atomic(run.pairs_file(), out.str());
  std::printf("pairs: %zu pairs over %zu records\n", keys.size(), index.size());
  return kExitOk;
}

// ---- label ----------------------------------------------------------------

int cmd_label(const Run& run) {
  require_file(run.records_file());
  require_file(run.pairs_file());
  const auto index = load_records(run.records_file());
  const auto keys = load_keys(run.pairs_file());

  LabelerConfig lc = run.cfg.labeler;
  lc.apply_environment();
  if (lc.cache_path.empty()) lc.cache_path = run.out / "llm_cache.jsonl";
  auto transport = make_http_transport(lc);
  LabelCache cache(lc.cache_path);
  const auto result = label_dataset(keys, index, lc, *transport, cache);

  write_file_atomic(run.labeled_file(), jsonl(result.pairs));
  const auto& s = result.summary;
  const json summary{{"pairs", s.pairs},           {"matches", s.matches},
                     {"nonmatches", s.nonmatches}, {"abstain_defaulted", s.abstain_defaulted},
                     {"requests", s.requests},     {"cache_hits", s.cache_hits}};
  write_file_atomic(run.out / "label_summary.json", summary.dump(2) + "\n");
  std::printf("label: %zu pairs, %zu match, %zu non-match, %zu abstain-defaulted, %zu requests\n",
              s.pairs, s.matches, s.nonmatches, s.abstain_defaulted, s.requests);
  return kExitOk;
}

// ---- train ----------------------------------------------------------------

int cmd_train(const Run& run, const std::optional<fs::path>& labels_opt) {
  const fs::path labels = labels_opt.value_or(run.labeled_file());
  require_file(run.records_file());
  require_file(labels);
  const auto index = load_records(run.records_file());
  const auto split = stratified_split(load_labeled(labels), run.cfg.split);

  write_file_atomic(run.out / "split_train.jsonl", jsonl(split.train));
  write_file_atomic(run.out / "split_val.jsonl", jsonl(split.val));
  write_file_atomic(run.out / "split_test.jsonl", jsonl(split.test));
  if (split.train.empty()) throw DataError("train: training split is empty");

  const auto model = train_classifier(split.train, index, run.cfg.hyper, run.cfg.feature_spec,
                                      split.val.empty() ? nullptr : &split.val);
  for (const auto& w : model.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  write_file_atomic(run.model_file(), model.to_json().dump(2) + "\n");
  std::printf("train: %zu train / %zu val / %zu test pairs, epoch %zu selected, kernels %s\n",
              split.train.size(), split.val.size(), split.test.size(), model.selected_epoch,
              std::string(kernels::isa_name(kernels::active().isa)).c_str());
  return kExitOk;
}

// ---- predict --------------------------------------------------------------

int cmd_predict(const Run& run, bool use_rule, const std::optional<fs::path>& pairs_opt) {
  const fs::path pairs = pairs_opt.value_or(run.pairs_file());
  require_file(run.records_file());
  require_file(pairs);
  const auto index = load_records(run.records_file());
  const auto keys = load_keys(pairs);

  std::ostringstream out;
  std::size_t matches = 0;
  if (use_rule) {
    run.cfg.rule.validate();
    for (const auto& k : keys) {
      const int label = rule_match(index.at(k.uri_1()), index.at(k.uri_2()), run.cfg.rule,
                                   run.cfg.feature_spec);
      matches += label;
      out << to_json(LabeledPair{k, label, Provenance::Predicted, {}}).dump() << '\n';
    }
  } else {
    require_file(run.model_file());
    const auto model = ClassifierModel::from_json(json::parse(read_file(run.model_file())));
    const auto preds =
        predict_design(model, build_design(keys, index, model.feature_spec));
    for (std::size_t i = 0; i < keys.size(); ++i) {
      matches += preds[i].label;
      auto j = to_json(LabeledPair{keys[i], preds[i].label, Provenance::Predicted, {}});
      j["probability"] = preds[i].probability;
      out << j.dump() << '\n';
    }
  }
  write_file_atomic(run.predictions_file(), out.str());
  std::printf("predict: %zu pairs, %zu predicted matches (%s)\n", keys.size(), matches,
              use_rule ? "rule baseline" : "classifier");
  return kExitOk;
}

// ---- evaluate -------------------------------------------------------------

int cmd_evaluate(const Run& run, const std::optional<fs::path>& predictions_opt,
                 const std::optional<fs::path>& truth, const std::vector<std::uint64_t>& counts) {
  ConfusionCounts c;
  if (!counts.empty()) {
    if (counts.size() != 4) throw ConfigError("evaluate: --counts takes tp,fp,tn,fn");
    c = {counts[0], counts[1], counts[2], counts[3]};
  } else {
    if (!truth) throw ConfigError("evaluate: --truth is required");
    const fs::path predictions = predictions_opt.value_or(run.predictions_file());
    require_file(predictions);
    require_file(*truth);
    c = confusion(load_labeled(predictions), load_labeled(*truth));
  }
  const auto r = make_report(c);
  const json report{{"tp", c.tp},
                    {"fp", c.fp},
                    {"tn", c.tn},
                    {"fn", c.fn},
                    {"match_f1", r.match_f1},
                    {"nonmatch_f1", r.nonmatch_f1},
                    {"macro_f1", r.macro_f1}};
  if (counts.empty()) write_file_atomic(run.out / "eval_report.json", report.dump(2) + "\n");
  std::printf("match_f1 nonmatch_f1 macro_f1: %s\n", format_table_row(r).c_str());
  return kExitOk;
}

// ---- sweep ----------------------------------------------------------------

int cmd_sweep(const Run& run, const std::optional<fs::path>& pool_opt,
              const std::optional<fs::path>& truth, SweepConfig sc) {
  if (!truth) throw ConfigError("sweep: --truth is required");
  const fs::path pool = pool_opt.value_or(run.labeled_file());
  require_file(run.records_file());
  require_file(pool);
  require_file(*truth);
  sc.hyper = run.cfg.hyper;
  sc.feature_spec = run.cfg.feature_spec;
  const auto index = load_records(run.records_file());
  const auto rows = run_sweep(sc, load_labeled(pool), load_labeled(*truth), index);
  std::ostringstream out;
  write_sweep_csv(out, sc, rows);
  write_file_atomic(run.out / "sweep_results.csv", out.str());
  std::printf("sweep: %s, %zu grid points\n", to_string(sc.mode), rows.size());
  return kExitOk;
}

// ---- cluster --------------------------------------------------------------

int cmd_cluster(const Run& run, const std::optional<fs::path>& predictions_opt) {
  const fs::path predictions = predictions_opt.value_or(run.predictions_file());
  require_file(run.records_file());
  require_file(predictions);
  const auto index = load_records(run.records_file());
  std::vector<std::string> uris;
  for (const auto& r : index.records()) uris.push_back(r.uri);
  const auto pairs = load_labeled(predictions);
  const auto clusters = cluster_matches(uris, pairs);
  const auto review = review_clusters(clusters, pairs, run.cfg.max_cluster_size);

  std::ostringstream out;
  write_clusters(out, clusters);
  write_file_atomic(run.out / "clusters.jsonl", out.str());
  json contradictions = json::array();
  for (const auto& k : review.contradictions) contradictions.push_back({k.uri_1(), k.uri_2()});
  const json report{{"clusters", clusters.size()},
                    {"max_cluster_size", run.cfg.max_cluster_size},
                    {"oversize", review.oversize},
                    {"contradictions", contradictions}};
  write_file_atomic(run.out / "cluster_report.json", report.dump(2) + "\n");
  std::printf("cluster: %zu clusters, %zu oversize, %zu contradictions\n", clusters.size(),
              review.oversize.size(), review.contradictions.size());
  return kExitOk;
}

// ---- runtime --------------------------------------------------------------

struct RuntimeArgs {
  std::optional<fs::path> measurements;
  std::vector<std::size_t> benchmark_sizes;
  std::string linker = "classifier";
  std::optional<double> k;
  std::vector<std::size_t> extrapolate;
  bool with_intercept = false;
};

int cmd_runtime(const Run& run, const RuntimeArgs& a) {
  RuntimeModel model;
  std::vector<Measurement> ms;
  if (a.k) {
    if (*a.k < 0.0) throw ConfigError("runtime: k must be non-negative");
    model.k = *a.k;
    model.n_points = 0;
  } else {
    if (a.measurements) {
      require_file(*a.measurements);
      std::istringstream in(read_file(*a.measurements));
      ms = read_measurements(in);
    } else if (!a.benchmark_sizes.empty()) {
      require_file(run.records_file());
      const auto index = load_records(run.records_file());
      const std::size_t largest =
          *std::max_element(a.benchmark_sizes.begin(), a.benchmark_sizes.end());
      if (largest > index.size()) {
        throw DataError("runtime: benchmark needs " + std::to_string(largest) +
                        " records, have " + std::to_string(index.size()));
      }
      std::optional<ClassifierModel> cm;
      if (a.linker == "classifier") {
        require_file(run.model_file());
        cm = ClassifierModel::from_json(json::parse(read_file(run.model_file())));
      } else if (a.linker != "rule") {
        throw ConfigError("runtime: --linker must be classifier or rule");
      }
      std::vector<Record> pool(index.records().begin(), index.records().end());
      ms = benchmark(a.benchmark_sizes, [&](std::size_t n) {
        const std::vector<Record> subset(pool.begin(), pool.begin() + static_cast<long>(n));
        const RecordIndex sub(subset);
        const auto keys = enumerate_pairs(subset);
        std::size_t sink = 0;
        if (cm) {
          for (const auto& p : predict_pairs(*cm, keys, sub)) sink += p.label;
        } else {
          for (const auto& k : keys) {
            sink += rule_match(sub.at(k.uri_1()), sub.at(k.uri_2()), run.cfg.rule,
                               run.cfg.feature_spec);
          }
        }
        (void)sink;
      });
      std::ostringstream out;
      write_measurements(out, ms);
      write_file_atomic(run.out / "measurements.csv", out.str());
    } else {
      throw ConfigError("runtime: give --k, --measurements or --benchmark");
    }
    model = fit_runtime(ms, a.with_intercept);
  }

  json j{{"k", model.k},
         {"intercept", model.intercept},
         {"fit_residual", model.fit_residual},
         {"n_points", model.n_points}};
  json ex = json::array();
  for (std::size_t n : a.extrapolate) {
    const double s = predict_seconds(model, n);
    ex.push_back({{"record_count", n}, {"seconds", s}, {"days", s / kSecondsPerDay}});
  }
  j["extrapolations"] = ex;
  write_file_atomic(run.out / "runtime_model.json", j.dump(2) + "\n");
  std::printf("runtime: k=%.6g s, rms=%.3g s over %zu points", model.k, model.fit_residual,
              model.n_points);
  for (std::size_t n : a.extrapolate) {
    const double s = predict_seconds(model, n);
    std::printf("; n=%zu -> %.1f s (%.1f days)", n, s, s / kSecondsPerDay);
  }
  std::printf("\n");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"minerlink: LLM-labeled record linkage for spatial-tabular databases"};
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<fs::path> config_path;
  std::optional<std::uint64_t> seed;
  std::optional<fs::path> output_dir;
  app.add_option("--config", config_path, "Pipeline configuration (JSON)")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Seed for splits, training and sweeps");
  app.add_option("--output-dir", output_dir, "Artifact directory");

  auto* ingest = app.add_subcommand("ingest", "Read configured CSV datasets into records.jsonl");
  auto* pairs = app.add_subcommand("pairs", "Enumerate all record pairs into pairs.jsonl");
  auto* label = app.add_subcommand("label", "Label pairs with the LLM endpoint");

  auto* train = app.add_subcommand("train", "Split labeled pairs and train the classifier");
  std::optional<fs::path> train_labels;
  train->add_option("--labels", train_labels, "Labeled pairs (default labeled.jsonl)");

  auto* predict_cmd = app.add_subcommand("predict", "Predict match labels for pairs");
  bool use_rule = false;
  std::optional<fs::path> predict_pairs_path;
  predict_cmd->add_flag("--rule", use_rule, "Use the distance + name-similarity baseline");
  predict_cmd->add_option("--pairs", predict_pairs_path, "Pair keys (default pairs.jsonl)");

  auto* evaluate = app.add_subcommand("evaluate", "Score predictions against ground truth");
  std::optional<fs::path> eval_predictions, eval_truth;
  std::vector<std::uint64_t> eval_counts;
  evaluate->add_option("--predictions", eval_predictions, "Predicted pairs");
  evaluate->add_option("--truth", eval_truth, "Ground-truth pairs");
  evaluate->add_option("--counts", eval_counts, "Score raw counts tp,fp,tn,fn instead")
      ->delimiter(',')
      ->expected(4);

  auto* sweep = app.add_subcommand("sweep", "Training-size / imbalance sweep");
  std::optional<fs::path> sweep_pool, sweep_truth;
  std::optional<std::string> sweep_mode;
  std::vector<double> sweep_grid;
  std::optional<std::size_t> sweep_fixed;
  sweep->add_option("--pool", sweep_pool, "Labeled training pool (default labeled.jsonl)");
  sweep->add_option("--truth", sweep_truth, "Ground-truth test pairs");
  sweep->add_option("--mode", sweep_mode,
                    "BalancedGrowth | FixedMatchVaryNonmatch | FixedNonmatchVaryMatch");
  sweep->add_option("--grid", sweep_grid, "Grid values")->delimiter(',');
  sweep->add_option("--fixed", sweep_fixed, "Size of the fixed class");

  auto* cluster = app.add_subcommand("cluster", "Group predicted matches into site clusters");
  std::optional<fs::path> cluster_predictions;
  cluster->add_option("--predictions", cluster_predictions, "Predicted pairs");

  auto* runtime = app.add_subcommand("runtime", "Fit and extrapolate the quadratic runtime law");
  RuntimeArgs rt;
  runtime->add_option("--measurements", rt.measurements, "CSV record_count,elapsed_seconds");
  runtime->add_option("--benchmark", rt.benchmark_sizes, "Record counts to time")->delimiter(',');
  runtime->add_option("--linker", rt.linker, "classifier | rule");
  runtime->add_option("--k", rt.k, "Use this coefficient instead of fitting");
  runtime->add_option("--extrapolate", rt.extrapolate, "Record counts to predict")->delimiter(',');
  runtime->add_flag("--with-intercept", rt.with_intercept, "Fit an intercept as well");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    Run run{load_config(config_path), {}};
    if (seed) {
      run.cfg.split.seed = *seed;
      run.cfg.hyper.seed = *seed;
      run.cfg.sweep.seed = *seed;
    }
    run.out = output_dir.value_or(run.cfg.output_dir);
    std::error_code ec;
    fs::create_directories(run.out, ec);
    if (ec || !fs::is_directory(run.out)) {
      throw ConfigError("cannot create output directory " + run.out.string());
    }
    const DirectoryLock lock(run.out);

    if (ingest->parsed()) return cmd_ingest(run);
    if (pairs->parsed()) return cmd_pairs(run);
    if (label->parsed()) return cmd_label(run);
    if (train->parsed()) return cmd_train(run, train_labels);
    if (predict_cmd->parsed()) return cmd_predict(run, use_rule, predict_pairs_path);
    if (evaluate->parsed()) return cmd_evaluate(run, eval_predictions, eval_truth, eval_counts);
    if (sweep->parsed()) {
      SweepConfig sc = run.cfg.sweep;
      if (sweep_mode) sc.mode = sweep_mode_from_string(*sweep_mode);
      if (!sweep_grid.empty()) sc.grid = sweep_grid;
      if (sweep_fixed) sc.fixed_count = *sweep_fixed;
      return cmd_sweep(run, sweep_pool, sweep_truth, sc);
    }
    if (cluster->parsed()) return cmd_cluster(run, cluster_predictions);
    if (runtime->parsed()) return cmd_runtime(run, rt);
  } catch (const TransportError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitTransport;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const json::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  }
  return kExitUsage;
}
