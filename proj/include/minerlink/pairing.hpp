#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "minerlink/records.hpp"

namespace minerlink {

/// Unordered record pair stored in canonical order (uri_1 < uri_2).
class PairKey {
 public:
  /// Orders the two uris; throws DataError when they are equal.
  PairKey(std::string a, std::string b);

  const std::string& uri_1() const { return uri_1_; }
  const std::string& uri_2() const { return uri_2_; }

  friend bool operator==(const PairKey&, const PairKey&) = default;
  friend auto operator<=>(const PairKey&, const PairKey&) = default;

 private:
  std::string uri_1_;
  std::string uri_2_;
};

struct PairKeyHash {
  std::size_t operator()(const PairKey& k) const;
};

enum class Provenance { GroundTruth, LLM, LLMAbstainDefault, Predicted };

const char* to_string(Provenance p);
Provenance provenance_from_string(const std::string& s);

struct LabeledPair {
  PairKey key;
  int label = 0;  // 1 match, 0 non-match
  Provenance provenance = Provenance::GroundTruth;
  std::optional<std::string> raw_response;

  friend bool operator==(const LabeledPair&, const LabeledPair&) = default;
};

/// Every unordered pair over the pooled records of `datasets`, within and
/// across datasets, sorted by (uri_1, uri_2). Throws DataError on a uri that
/// occurs twice.
std::vector<PairKey> enumerate_pairs(const std::vector<Dataset>& datasets);

/// Same over an already pooled record list. When `max_distance_km` is set,
/// pairs whose records both have locations farther apart than that are
/// dropped; pairs with a missing location are kept.
std::vector<PairKey> enumerate_pairs(const std::vector<Record>& records,
                                     std::optional<double> max_distance_km = {});

struct SplitSpec {
  std::array<double, 3> fractions{0.8, 0.1, 0.1};  // train, val, test
  std::uint64_t seed = 0;

  void validate() const;
};

struct Split {
  std::vector<LabeledPair> train;
  std::vector<LabeledPair> val;
  std::vector<LabeledPair> test;
};

/// Per-class largest-remainder allocation: for every class c and split s,
/// |count(c, s) - fraction(s) * count(c)| <= 1 (strictly < 1 in fact).
/// Returns the per-split counts for a class of size n.
std::array<std::size_t, 3> allocate_largest_remainder(
    std::size_t n, const std::array<double, 3>& fractions);

Split stratified_split(std::vector<LabeledPair> pairs, const SplitSpec& spec);

/// Uniform sample without replacement of exactly `match_count` label-1 and
/// `nonmatch_count` label-0 pairs, output sorted by key. Throws DataError
/// naming the short class when the pool is too small.
std::vector<LabeledPair> subsample_sweep(std::vector<LabeledPair> pairs,
                                         std::size_t match_count,
                                         std::size_t nonmatch_count,
                                         std::uint64_t seed);

nlohmann::json to_json(const LabeledPair& p);
LabeledPair labeled_pair_from_json(const nlohmann::json& j);

/// JSON Lines, one object per pair.
void write_labeled_pairs(std::ostream& out, const std::vector<LabeledPair>& pairs);
std::vector<LabeledPair> read_labeled_pairs(std::istream& in);

void write_pair_keys(std::ostream& out, const std::vector<PairKey>& keys);
std::vector<PairKey> read_pair_keys(std::istream& in);

}  // namespace minerlink
