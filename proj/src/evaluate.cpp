#include "minerlink/evaluate.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <unordered_map>

#include "minerlink/error.hpp"

namespace minerlink {

ConfusionCounts confusion(const std::vector<LabeledPair>& predictions,
                          const std::vector<LabeledPair>& truth) {
  std::unordered_map<PairKey, int, PairKeyHash> truth_by_key;
  truth_by_key.reserve(truth.size());
  for (const auto& t : truth) {
    if (!truth_by_key.emplace(t.key, t.label).second) {
      throw DataError("confusion: duplicate truth pair (" + t.key.uri_1() + ", " +
                      t.key.uri_2() + ")");
    }
  }

  ConfusionCounts c;
  std::vector<std::string> missing;
  std::size_t seen = 0;
  auto note = [&](const PairKey& k, const char* side) {
    if (missing.size() < 10) {
      missing.push_back("(" + k.uri_1() + ", " + k.uri_2() + ") missing from " + side);
    }
  };
  std::unordered_map<PairKey, bool, PairKeyHash> used;
  for (const auto& p : predictions) {
    const auto it = truth_by_key.find(p.key);
    if (it == truth_by_key.end()) {
      note(p.key, "truth");
      continue;
    }
    if (!used.emplace(p.key, true).second) {
      throw DataError("confusion: duplicate prediction (" + p.key.uri_1() + ", " +
                      p.key.uri_2() + ")");
    }
    ++seen;
    const bool pred = p.label == 1;
    const bool real = it->second == 1;
    if (pred && real) ++c.tp;
    else if (pred) ++c.fp;
    else if (real) ++c.fn;
    else ++c.tn;
  }
  if (seen != truth.size()) {
    for (const auto& t : truth) {
      if (!used.contains(t.key)) note(t.key, "predictions");
    }
  }
  if (!missing.empty()) {
    std::string msg = "confusion: key sets differ:";
    for (const auto& m : missing) msg += "\n  " + m;
    throw DataError(msg);
  }
  return c;
}

namespace {

double ratio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

double match_f1(const ConfusionCounts& c) {
  return ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn);
}

double nonmatch_f1(const ConfusionCounts& c) {
  return ratio(2 * c.tn, 2 * c.tn + c.fp + c.fn);
}

double macro_f1(const ConfusionCounts& c) {
  return ratio(c.tp, 2 * c.tp + c.fp + c.fn) + ratio(c.tn, 2 * c.tn + c.fp + c.fn);
}

EvalReport make_report(const ConfusionCounts& c) {
  return {c, match_f1(c), nonmatch_f1(c), macro_f1(c)};
}

double percent_2dp(double r) {
  // A small nudge keeps values like 0.69545 (stored as 0.6954499..) rounding up.
  return std::floor(r * 10000.0 + 0.5 + 1e-9) / 100.0;
}

std::string format_table_row(const EvalReport& r) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.2f %.2f %.2f", percent_2dp(r.match_f1),
                percent_2dp(r.nonmatch_f1), percent_2dp(r.macro_f1));
  return buf;
}

const char* to_string(SweepMode m) {
  switch (m) {
    case SweepMode::BalancedGrowth:
      return "BalancedGrowth";
    case SweepMode::FixedMatchVaryNonmatch:
      return "FixedMatchVaryNonmatch";
    case SweepMode::FixedNonmatchVaryMatch:
      return "FixedNonmatchVaryMatch";
  }
  return "?";
}

SweepMode sweep_mode_from_string(const std::string& s) {
  if (s == "BalancedGrowth") return SweepMode::BalancedGrowth;
  if (s == "FixedMatchVaryNonmatch") return SweepMode::FixedMatchVaryNonmatch;
  if (s == "FixedNonmatchVaryMatch") return SweepMode::FixedNonmatchVaryMatch;
  throw ConfigError("unknown sweep mode '" + s + "'");
}

void SweepConfig::validate() const {
  if (grid.empty()) throw ConfigError("sweep: empty grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0) || !std::isfinite(grid[i])) {
      throw ConfigError("sweep: grid values must be finite and non-negative");
    }
    if (i > 0 && !(grid[i] > grid[i - 1])) {
      throw ConfigError("sweep: grid must be strictly increasing");
    }
  }
  hyper.validate();
}

std::vector<SweepPoint> plan_sweep(const SweepConfig& cfg, std::size_t pool_matches,
                                   std::size_t pool_nonmatches) {
  cfg.validate();
  auto count = [](double v) { return static_cast<std::size_t>(std::llround(v)); };
  std::vector<SweepPoint> plan;
  for (double g : cfg.grid) {
    SweepPoint p{g, 0, 0};
    switch (cfg.mode) {
      case SweepMode::BalancedGrowth:
        p.match_count = p.nonmatch_count = count(g);
        break;
      case SweepMode::FixedMatchVaryNonmatch:
        p.match_count = cfg.fixed_count;
        p.nonmatch_count = count(static_cast<double>(cfg.fixed_count) * g);
        break;
      case SweepMode::FixedNonmatchVaryMatch:
        p.match_count = count(g);
        p.nonmatch_count = cfg.fixed_count;
        break;
    }
    if (p.match_count > pool_matches || p.nonmatch_count > pool_nonmatches) {
      throw DataError("sweep: grid value " + std::to_string(g) + " needs " +
                      std::to_string(p.match_count) + " match / " +
                      std::to_string(p.nonmatch_count) + " non-match pairs, pool has " +
                      std::to_string(pool_matches) + " / " +
                      std::to_string(pool_nonmatches));
    }
    if (p.match_count + p.nonmatch_count == 0) {
      throw DataError("sweep: grid value " + std::to_string(g) + " yields an empty training set");
    }
    plan.push_back(p);
  }
  return plan;
}

std::vector<SweepRow> run_sweep(const SweepConfig& cfg,
                                const std::vector<LabeledPair>& labeled_pool,
                                const std::vector<LabeledPair>& truth,
                                const RecordIndex& records) {
  std::size_t matches = 0;
  for (const auto& p : labeled_pool) matches += p.label == 1 ? 1 : 0;
  const auto plan = plan_sweep(cfg, matches, labeled_pool.size() - matches);
  for (const auto& p : labeled_pool) {
    records.at(p.key.uri_1());
    records.at(p.key.uri_2());
  }

  // Test features are shared by every grid point.
  const TrainData test = prepare(truth, records, cfg.feature_spec);
  TrainData pool = prepare(labeled_pool, records, cfg.feature_spec);
  std::unordered_map<PairKey, std::size_t, PairKeyHash> pool_row;
  for (std::size_t i = 0; i < pool.pairs.size(); ++i) pool_row.emplace(pool.pairs[i].key, i);

  std::vector<SweepRow> rows;
  for (const auto& point : plan) {
    const auto sample = subsample_sweep(pool.pairs, point.match_count,
                                        point.nonmatch_count, cfg.seed);
    TrainData train;
    train.pairs = sample;
    train.design.rows = sample.size();
    train.design.data.resize(kFeatureCount * sample.size());
    for (std::size_t i = 0; i < sample.size(); ++i) {
      const std::size_t src = pool_row.at(sample[i].key);
      for (std::size_t j = 0; j < kFeatureCount; ++j) {
        train.design.data[j * sample.size() + i] =
            pool.design.data[j * pool.design.rows + src];
      }
    }
    const auto model = train_classifier(train, cfg.hyper, cfg.feature_spec);
    const auto preds = predict_design(model, test.design);
    std::vector<LabeledPair> labeled;
    labeled.reserve(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i) {
      labeled.push_back({test.pairs[i].key, preds[i].label, Provenance::Predicted, {}});
    }
    rows.push_back({point, make_report(confusion(labeled, test.pairs))});
  }
  return rows;
}

namespace {

std::string shortest(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

void write_sweep_csv(std::ostream& out, const SweepConfig& cfg,
                     const std::vector<SweepRow>& rows) {
  out << "mode,grid_value,match_count,nonmatch_count,match_f1,nonmatch_f1,macro_f1,seed\n";
  for (const auto& r : rows) {
    out << to_string(cfg.mode) << ',' << shortest(r.point.grid_value) << ','
        << r.point.match_count << ',' << r.point.nonmatch_count << ','
        << shortest(r.report.match_f1) << ',' << shortest(r.report.nonmatch_f1) << ','
        << shortest(r.report.macro_f1) << ',' << cfg.seed << '\n';
  }
}

}  // namespace minerlink
