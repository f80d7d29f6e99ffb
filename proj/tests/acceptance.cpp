// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
// failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <regex>
#include <set>
#include <sstream>
#include <string>

#include "minerlink/classifier.hpp"
#include "minerlink/cluster.hpp"
#include "minerlink/evaluate.hpp"
#include "minerlink/kernels.hpp"
#include "minerlink/llm_labeler.hpp"
#include "minerlink/matcher.hpp"
#include "minerlink/pairing.hpp"
#include "minerlink/rng.hpp"
#include "minerlink/runtime_model.hpp"
#include "minerlink/serialize.hpp"
#include "support/cluster_oracle.hpp"
#include "support/fixtures.hpp"
#include "support/mock_llm_server.hpp"
#include "support/synthetic.hpp"

using namespace minerlink;
namespace t = minerlink::testing;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) {
      pass = false;
      detail = what;
    }
  }
};

bool within_pp(double ratio, double expected_percent, double tol = 0.02) {
  return std::abs(ratio * 100.0 - expected_percent) <= tol;
}

Outcome metrics_fixtures() {
  Outcome o;
  const ConfusionCounts w{18, 51, 74617, 5};
  const ConfusionCounts ni{11, 2, 256, 7};
  o.require(within_pp(match_f1(w), 39.13), "Tungsten match F1");
  o.require(within_pp(nonmatch_f1(w), 99.96), "Tungsten non-match F1");
  const double nm = match_f1(ni) * 100.0;
  o.require(nm >= 70.96 - 0.02 && nm <= 70.97 + 0.02, "Nickel match F1");
  o.require(within_pp(nonmatch_f1(ni), 98.27), "Nickel non-match F1");
  char buf[160];
  std::snprintf(buf, sizeof buf, "W %.2f/%.2f, Ni %.2f/%.2f", match_f1(w) * 100,
                nonmatch_f1(w) * 100, nm, nonmatch_f1(ni) * 100);
  if (o.pass) o.detail = buf;
  return o;
}

Outcome pair_counts() {
  Outcome o;
  const auto a = enumerate_pairs(t::plain_records(387)).size();
  const auto b = enumerate_pairs(t::plain_records(24)).size();
  o.require(a == 74691, "387 records gave " + std::to_string(a));
  o.require(b == 276, "24 records gave " + std::to_string(b));
  if (o.pass) o.detail = "74691 and 276 pairs";
  return o;
}

Outcome runtime_extrapolation() {
  Outcome o;
  const double fast = predict_seconds({0.004}, 300000) / kSecondsPerDay;
  const double slow = predict_seconds({0.073}, 300000) / kSecondsPerDay;
  o.require(std::abs(fast / 4166.7 - 1.0) <= 0.01, "k=0.004 extrapolation");
  o.require(std::abs(slow / 76041.0 - 1.0) <= 0.01, "k=0.073 extrapolation");
  o.require(std::abs(fast / 4166.0 - 1.0) <= 0.01 && std::abs(slow / 76000.0 - 1.0) <= 0.01,
            "reported day counts");
  for (double k : {0.073, 0.004, 1.7e-6}) {
    std::vector<Measurement> ms;
    for (std::size_t n : {10, 25, 50, 100, 200, 387}) {
      ms.push_back({n, k * static_cast<double>(n * n - n)});
    }
    const double fitted = fit_runtime(ms).k;
    o.require(std::abs(fitted - k) / k <= 1e-9, "noiseless fit of k");
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.1f days, %.1f days", fast, slow);
  if (o.pass) o.detail = buf;
  return o;
}

Outcome macro_identity() {
  Outcome o;
  Rng rng(20240);
  for (int i = 0; i < 10000; ++i) {
    const std::uint64_t scale = 1 + rng.below(1000000);
    const ConfusionCounts c{rng.below(scale), rng.below(scale), rng.below(scale),
                            rng.below(scale)};
    const double mean = (match_f1(c) + nonmatch_f1(c)) / 2.0;
    const double m = macro_f1(c);
    const bool ok = m == mean || std::nextafter(m, INFINITY) == mean ||
                    std::nextafter(m, -INFINITY) == mean;
    o.require(ok, "counts " + std::to_string(c.tp) + "," + std::to_string(c.fp) + "," +
                      std::to_string(c.tn) + "," + std::to_string(c.fn));
  }
  if (o.pass) o.detail = "10000 random confusion counts";
  return o;
}

Outcome serialization_goldens() {
  Outcome o;
  const auto r = t::golden_records();
  o.require(r.size() == 2, "golden records missing");
  if (!o.pass) return o;
  const std::string prompt = build_pair_prompt(r[0], r[1]);
  o.require(prompt == t::read_fixture("golden/prompt_pair.txt"), "pair prompt");
  o.require(serialize_ditto_pair(r[0], r[1]) == t::read_fixture("golden/ditto_pair.txt"),
            "Ditto pair");
  o.require(serialize_prompt_entity(r[0]).text == t::read_fixture("golden/prompt_entity_a.txt"),
            "prompt entity");
  o.require(serialize_ditto_entity(r[0]).text == t::read_fixture("golden/ditto_entity_a.txt"),
            "Ditto entity");
  o.require(std::count(prompt.begin(), prompt.end(), '\n') == 3, "four-line template");
  o.require(prompt.ends_with("\nAnswer only in Yes or No."), "format constraint line");
  if (o.pass) o.detail = "4 golden files byte-identical";
  return o;
}

std::string stem_of(const std::string& line) {
  static const std::regex re("site_name:(.*? [0-9]+)");
  std::smatch m;
  return std::regex_search(line, m, re) ? m[1].str() : "";
}

Outcome mock_llm_end_to_end() {
  Outcome o;
  constexpr int kBound = 4;
  t::MockLlmServer server(
      [](const std::string& prompt) {
        const auto a_end = prompt.find('\n');
        const auto b_end = prompt.find('\n', a_end + 1);
        const auto a = stem_of(prompt.substr(0, a_end));
        return !a.empty() && a == stem_of(prompt.substr(a_end + 1, b_end - a_end - 1)) ? "Yes."
                                                                                        : "No";
      },
      std::chrono::microseconds(200));
  const auto corpus = t::make_corpus(60, 4, 77, 100);
  o.require(corpus.records.size() == 100, "corpus size");
  const RecordIndex index(corpus.records);
  const auto keys = enumerate_pairs(corpus.records);
  o.require(keys.size() == 4950, "pair count " + std::to_string(keys.size()));

  LabelerConfig cfg;
  cfg.base_url = server.base_url();
  cfg.max_in_flight = kBound;
  cfg.timeout_s = 10;
  const auto cache_path = std::filesystem::temp_directory_path() / "minerlink_accept_cache.jsonl";
  std::filesystem::remove(cache_path);
  auto transport = make_http_transport(cfg);

  auto label_once = [&](std::size_t& requests) {
    LabelCache cache(cache_path);
    const auto out = label_dataset(keys, index, cfg, *transport, cache);
    requests = out.summary.requests;
    std::ostringstream s;
    write_labeled_pairs(s, out.pairs);
    return std::make_pair(out, s.str());
  };
  // Records with identical payloads share a prompt and hence a cache entry.
  std::set<std::string> prompts;
  for (const auto& k : keys) {
    prompts.insert(build_pair_prompt(index.at(k.uri_1()), index.at(k.uri_2())));
  }
  std::size_t cold_requests = 0, warm_requests = 0;
  const auto [cold, cold_bytes] = label_once(cold_requests);
  const auto [warm, warm_bytes] = label_once(warm_requests);

  o.require(cold.pairs.size() == keys.size(), "one row per pair");
  std::set<PairKey> seen;
  for (std::size_t i = 0; i < cold.pairs.size() && i < keys.size(); ++i) {
    const auto& p = cold.pairs[i];
    o.require(p.key == keys[i] && (p.label == 0 || p.label == 1) && p.raw_response,
              "row structure");
    seen.insert(p.key);
  }
  o.require(seen.size() == keys.size(), "duplicate rows");
  const auto c = confusion(cold.pairs, corpus.truth);
  o.require(c.fp == 0 && c.fn == 0, "scripted answers not reflected in labels");
  o.require(server.max_in_flight() <= kBound,
            "in-flight peak " + std::to_string(server.max_in_flight()));
  o.require(cold_requests == prompts.size() &&
                cold_requests + cold.summary.cache_hits == keys.size(),
            "cold requests " + std::to_string(cold_requests));
  o.require(warm_requests == 0, "warm run issued " + std::to_string(warm_requests));
  o.require(server.requests() == cold_requests, "server saw extra requests");
  o.require(warm_bytes == cold_bytes, "warm run bytes differ");
  if (o.pass) {
    o.detail = "4950 rows, " + std::to_string(cold_requests) + " requests for " +
               std::to_string(prompts.size()) + " distinct prompts, peak in-flight " + std::to_string(server.max_in_flight()) + "/" +
               std::to_string(kBound) + ", warm run 0 requests";
  }
  return o;
}

TrainData separable_pairs(std::size_t rows, std::uint64_t seed, double positive_rate) {
  Rng rng(seed);
  TrainData d;
  d.design.rows = rows;
  d.design.data.resize(kFeatureCount * rows);
  // Label is the sign of a fixed hyperplane with a margin of 0.25.
  const std::array<double, kFeatureCount> normal{1.0, -0.5, 0.75, 0.0, 0.3, 0.0, -0.2};
  for (std::size_t i = 0; i < rows; ++i) {
    const int label = rng.uniform() < positive_rate ? 1 : 0;
    std::array<double, kFeatureCount> x{};
    double dot = 0.0;
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
      x[j] = rng.normal();
      dot += x[j] * normal[j];
    }
    double norm2 = 0.0;
    for (double v : normal) norm2 += v * v;
    const double target = (label ? 1.0 : -1.0) * (0.25 + std::abs(rng.normal()));
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
      x[j] += (target - dot) * normal[j] / norm2;
      d.design.data[j * rows + i] = x[j];
    }
    d.pairs.push_back({PairKey("x:" + std::to_string(seed) + ":" + std::to_string(i),
                               "y:" + std::to_string(i)),
                       label, Provenance::GroundTruth, {}});
  }
  return d;
}

ConfusionCounts score(const ClassifierModel& m, const TrainData& d) {
  const auto preds = predict_design(m, d.design);
  std::vector<LabeledPair> labeled;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    labeled.push_back({d.pairs[i].key, preds[i].label, Provenance::Predicted, {}});
  }
  return confusion(labeled, d.pairs);
}

Outcome classifier_sanity() {
  Outcome o;
  Rng rng(5150);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t rows = 1 + rng.below(64);
    DesignMatrix x;
    x.rows = rows;
    x.data.resize(kFeatureCount * rows);
    for (auto& v : x.data) v = rng.normal();
    std::vector<double> y(rows), s(rows);
    for (std::size_t i = 0; i < rows; ++i) {
      y[i] = static_cast<double>(rng.below(2));
      s[i] = 0.25 + rng.uniform();
    }
    const LogisticObjective obj(x, y, s, 0.1 * rng.uniform());
    std::vector<double> w(kFeatureCount);
    for (auto& v : w) v = rng.normal();
    const double b = rng.normal();
    const auto g = obj.gradient(w, b);
    for (std::size_t j = 0; j <= kFeatureCount; ++j) {
      const double h = 1e-6;
      auto wp = w, wm = w;
      double bp = b, bm = b;
      if (j < kFeatureCount) {
        wp[j] += h;
        wm[j] -= h;
      } else {
        bp += h;
        bm -= h;
      }
      const double fd = (obj.loss(wp, bp) - obj.loss(wm, bm)) / (2 * h);
      worst = std::max(worst, std::abs(g[j] - fd) / std::max(1.0, std::abs(fd)));
    }
  }
  o.require(worst <= 1e-5, "gradient error " + std::to_string(worst));

  const auto train = separable_pairs(2000, 1, 0.3);
  const auto test = separable_pairs(2000, 2, 0.3);
  TrainHyper h;
  h.epochs = 30;
  const auto model = train_classifier(train, h, {});
  const double train_macro = macro_f1(score(model, train));
  const double test_macro = macro_f1(score(model, test));
  o.require(train_macro >= 0.95, "separable train macro F1 " + std::to_string(train_macro));

  auto all_no = separable_pairs(2000, 3, 0.3);
  for (auto& p : all_no.pairs) p.label = 0;
  const auto degenerate = train_classifier(all_no, h, {});
  const auto dc = score(degenerate, test);
  o.require(dc.tp == 0 && dc.fp == 0, "all-non-match model predicted matches");
  o.require(match_f1(dc) == 0.0, "all-non-match match F1");

  h.seed = 42;
  const auto m1 = train_classifier(train, h, {});
  const auto m2 = train_classifier(train, h, {});
  o.require(m1 == m2 && m1.to_json().dump() == m2.to_json().dump(), "seeded models differ");

  char buf[200];
  std::snprintf(buf, sizeof buf,
                "grad err %.1e; macro F1 %.4f train / %.4f held-out; all-non-match F1 %.0f; "
                "seeded models identical; kernels %s",
                worst, train_macro, test_macro, match_f1(dc),
                std::string(kernels::isa_name(kernels::active().isa)).c_str());
  if (o.pass) o.detail = buf;
  return o;
}

Outcome stratified_split_property() {
  Outcome o;
  Rng rng(8);
  for (int trial = 0; trial < 1000 && o.pass; ++trial) {
    const std::size_t m = rng.below(200);
    const std::size_t n = 1 + rng.below(2000);
    std::vector<LabeledPair> pairs;
    for (std::size_t i = 0; i < m + n; ++i) {
      pairs.push_back({PairKey("a:" + std::to_string(i), "b:" + std::to_string(i)), i < m ? 1 : 0,
                       Provenance::LLM, {}});
    }
    const double f0 = rng.uniform(), f1 = rng.uniform() * (1.0 - f0);
    const SplitSpec spec{{f0, f1, 1.0 - f0 - f1}, rng.next()};
    const auto split = stratified_split(pairs, spec);
    const std::array<const std::vector<LabeledPair>*, 3> parts{&split.train, &split.val,
                                                               &split.test};
    std::set<PairKey> seen;
    std::size_t total = 0;
    for (std::size_t s = 0; s < 3; ++s) {
      std::size_t cm = 0;
      for (const auto& p : *parts[s]) {
        cm += p.label;
        o.require(seen.insert(p.key).second, "overlapping partitions");
      }
      const std::size_t cn = parts[s]->size() - cm;
      total += parts[s]->size();
      o.require(std::abs(static_cast<double>(cm) - spec.fractions[s] * m) <= 1.0, "match bound");
      o.require(std::abs(static_cast<double>(cn) - spec.fractions[s] * n) <= 1.0,
                "non-match bound");
    }
    o.require(total == pairs.size(), "partition not exhaustive");
  }
  if (o.pass) o.detail = "1000 (ratio, seed) combinations";
  return o;
}

Outcome clustering_oracle() {
  Outcome o;
  Rng rng(99);
  for (int trial = 0; trial < 500 && o.pass; ++trial) {
    const auto g = t::random_graph(rng, 1 + rng.below(200));
    o.require(cluster_matches(g.uris, g.pairs) == t::closure_components(g.uris, g.pairs),
              "graph " + std::to_string(trial));
  }
  if (o.pass) o.detail = "500 random graphs, up to 200 nodes";
  return o;
}

bool well_formed(const std::string& csv, std::size_t rows) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) ||
      line != "mode,grid_value,match_count,nonmatch_count,match_f1,nonmatch_f1,macro_f1,seed") {
    return false;
  }
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
    if (cells.size() != 8) return false;
    for (int k = 4; k <= 6; ++k) {
      const double v = std::stod(cells[k]);
      if (!(v >= 0.0 && v <= 1.0)) return false;
    }
  }
  return n == rows;
}

Outcome sweep_harness() {
  Outcome o;
  const auto corpus = t::make_corpus(130, 6, 2023);
  const RecordIndex index(corpus.records);
  const auto split = stratified_split(corpus.truth, SplitSpec{{0.85, 0.0, 0.15}, 3});
  const auto& pool = split.train;
  const auto& truth = split.test;

  struct Mode {
    SweepMode mode;
    std::vector<double> grid;
    std::size_t fixed;
  };
  const std::vector<Mode> modes{
      {SweepMode::FixedMatchVaryNonmatch, {1, 10, 50, 59403.0 / 349.0}, 349},
      {SweepMode::FixedNonmatchVaryMatch, {10, 100, 349}, 59403},
      {SweepMode::BalancedGrowth, {10, 50, 100, 200, 300}, 0}};
  std::string detail;
  for (const auto& m : modes) {
    SweepConfig cfg{m.mode, m.grid, m.fixed, 7};
    std::vector<SweepRow> rows;
    try {
      rows = run_sweep(cfg, pool, truth, index);
    } catch (const std::exception& e) {
      o.require(false, std::string(to_string(m.mode)) + ": " + e.what());
      continue;
    }
    std::ostringstream csv;
    write_sweep_csv(csv, cfg, rows);
    o.require(well_formed(csv.str(), m.grid.size()), "malformed table");
    const auto& first = rows.front().point;
    const auto& last = rows.back().point;
    switch (m.mode) {
      case SweepMode::FixedMatchVaryNonmatch:
        o.require(first.match_count == 349 && last.match_count == 349 &&
                      last.nonmatch_count == 59403,
                  "fixed-match anchors");
        break;
      case SweepMode::FixedNonmatchVaryMatch:
        o.require(first.nonmatch_count == 59403 && last.match_count == 349,
                  "fixed-non-match anchors");
        break;
      case SweepMode::BalancedGrowth:
        o.require(first.match_count == 10 && last.match_count == 300 &&
                      last.nonmatch_count == 300,
                  "balanced anchors");
        break;
    }
    detail += std::string(detail.empty() ? "" : "; ") + to_string(m.mode) + " " +
              std::to_string(rows.size()) + " rows";
  }
  if (o.pass) o.detail = detail;
  return o;
}

Outcome haversine_checks() {
  Outcome o;
  const double unit = haversine_km({0, 0}, {1, 0});
  const double anti = haversine_km({0, 0}, {0, 180});
  o.require(std::abs(unit - 111.195) <= 0.001, "(0,0)-(1,0)");
  o.require(std::abs(anti - 20015.09) <= 0.01, "antipodal");
  Rng rng(31337);
  for (int i = 0; i < 10000; ++i) {
    const GeoPoint p{rng.uniform() * 180.0 - 90.0, rng.uniform() * 360.0 - 180.0};
    const GeoPoint q{rng.uniform() * 180.0 - 90.0, rng.uniform() * 360.0 - 180.0};
    o.require(std::abs(haversine_km(p, q) - haversine_km(q, p)) <= 1e-9, "symmetry");
    o.require(haversine_km(p, p) == 0.0, "zero identity");
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.6f km, %.6f km, 10000 random pairs", unit, anti);
  if (o.pass) o.detail = buf;
  return o;
}

struct Criterion {
  int id;
  const char* name;
  double limit_s;  // 0: no stated limit
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "metrics fixtures", 1.0, metrics_fixtures},
      {2, "pair-count fixtures", 1.0, pair_counts},
      {3, "runtime extrapolation", 0.0, runtime_extrapolation},
      {4, "macro F1 identity", 0.0, macro_identity},
      {5, "serialization goldens", 0.0, serialization_goldens},
      {6, "mock LLM end-to-end", 30.0, mock_llm_end_to_end},
      {7, "classifier sanity", 60.0, classifier_sanity},
      {8, "stratified split", 0.0, stratified_split_property},
      {9, "clustering oracle", 0.0, clustering_oracle},
      {10, "sweep harness", 0.0, sweep_harness},
      {11, "haversine", 0.0, haversine_checks},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (o.pass && c.limit_s > 0.0 && secs >= c.limit_s) {
      o = {false, "took " + std::to_string(secs) + " s"};
    }
    failures += o.pass ? 0 : 1;
    std::printf("%s %2d %-24s %7.3fs  %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs,
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
