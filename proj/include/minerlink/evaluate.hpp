#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "minerlink/classifier.hpp"
#include "minerlink/pairing.hpp"
#include "minerlink/records.hpp"

namespace minerlink {

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + fp + tn + fn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Counts over pairs matched by key. Throws DataError listing keys present on
/// one side only.
ConfusionCounts confusion(const std::vector<LabeledPair>& predictions,
                          const std::vector<LabeledPair>& truth);

/// 2tp / (2tp + fp + fn); 0 when the denominator is 0.
double match_f1(const ConfusionCounts& c);
/// 2tn / (2tn + fp + fn); 0 when the denominator is 0.
double nonmatch_f1(const ConfusionCounts& c);
/// tp / (2tp + fp + fn) + tn / (2tn + fp + fn).
double macro_f1(const ConfusionCounts& c);

struct EvalReport {
  ConfusionCounts counts;
  double match_f1 = 0.0;
  double nonmatch_f1 = 0.0;
  double macro_f1 = 0.0;
};

EvalReport make_report(const ConfusionCounts& c);

/// Ratio as a percentage rounded half-up to two decimals, e.g. 0.391304 -> 39.13.
double percent_2dp(double ratio);

/// "match_f1 nonmatch_f1 macro_f1" as percentages with two decimals.
std::string format_table_row(const EvalReport& r);

enum class SweepMode { BalancedGrowth, FixedMatchVaryNonmatch, FixedNonmatchVaryMatch };

const char* to_string(SweepMode m);
SweepMode sweep_mode_from_string(const std::string& s);

struct SweepConfig {
  SweepMode mode = SweepMode::BalancedGrowth;
  /// BalancedGrowth: per-class sizes. FixedMatchVaryNonmatch: non-match to
  /// match ratios. FixedNonmatchVaryMatch: match sizes.
  std::vector<double> grid;
  /// The fixed class size; ignored by BalancedGrowth.
  std::size_t fixed_count = 0;
  std::uint64_t seed = 0;
  TrainHyper hyper;
  FeatureSpec feature_spec;

  void validate() const;
};

struct SweepPoint {
  double grid_value = 0.0;
  std::size_t match_count = 0;
  std::size_t nonmatch_count = 0;
};

/// Training-set sizes per grid point. Throws DataError when the pool cannot
/// supply one of them.
std::vector<SweepPoint> plan_sweep(const SweepConfig& cfg, std::size_t pool_matches,
                                   std::size_t pool_nonmatches);

struct SweepRow {
  SweepPoint point;
  EvalReport report;
};

/// For each grid point: subsample the pool, train, predict every truth pair,
/// score. All planning errors surface before any training starts.
std::vector<SweepRow> run_sweep(const SweepConfig& cfg,
                                const std::vector<LabeledPair>& labeled_pool,
                                const std::vector<LabeledPair>& truth,
                                const RecordIndex& records);

/// Header: mode,grid_value,match_count,nonmatch_count,match_f1,nonmatch_f1,macro_f1,seed
void write_sweep_csv(std::ostream& out, const SweepConfig& cfg,
                     const std::vector<SweepRow>& rows);

}  // namespace minerlink
