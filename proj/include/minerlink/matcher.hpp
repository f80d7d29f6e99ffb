#pragma once

#include <array>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "minerlink/records.hpp"

namespace minerlink {

inline constexpr double kEarthRadiusKm = 6371.0;

/// Great-circle distance on a sphere of radius kEarthRadiusKm. Throws
/// DataError when either point is out of range.
double haversine_km(const GeoPoint& p1, const GeoPoint& p2);

enum class MissingLocationPolicy { Reject, TextOnly };

/// The hand-tuned baseline: close enough and similar enough names.
struct RuleConfig {
  double max_distance_km = 5.0;
  double min_cosine = 0.85;
  MissingLocationPolicy missing_location_policy = MissingLocationPolicy::TextOnly;

  void validate() const;
  static RuleConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// Which columns carry names and commodities.
struct FeatureSpec {
  std::vector<std::string> name_fields{"site_name", "name", "Ftr_Name"};
  /// Per-source overrides of name_fields, keyed by source_id.
  std::map<std::string, std::vector<std::string>> source_name_fields;
  /// Case-insensitive prefixes of commodity columns (commod1, commodity, ...).
  std::vector<std::string> commodity_prefixes{"commod"};
  /// Columns left out of shared_attr_agreement besides name and commodity
  /// columns (coordinates, identifiers).
  std::vector<std::string> agreement_exclude{"latitude", "longitude", "lat", "lon"};

  static FeatureSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;
};

/// Name strings used for name similarity: the record's name fields, or its
/// whole prompt serialization when it has none.
std::vector<std::string> name_texts(const Record& r, const FeatureSpec& spec);

/// Highest text_cosine over the cross product of both records' name texts.
double best_name_cosine(const Record& a, const Record& b, const FeatureSpec& spec);

/// Distance clause of rule_match; true when it passes (or is waived).
bool rule_distance_clause(const Record& a, const Record& b, const RuleConfig& cfg);
bool rule_text_clause(const Record& a, const Record& b, const RuleConfig& cfg,
                      const FeatureSpec& spec);

/// 1 iff both clauses pass.
int rule_match(const Record& a, const Record& b, const RuleConfig& cfg,
               const FeatureSpec& spec = {});

inline constexpr std::size_t kFeatureCount = 7;

inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames{
    "name_levenshtein_sim", "name_token_jaccard", "trigram_cosine",
    "log1p_haversine_km",   "location_missing",   "commodity_jaccard",
    "shared_attr_agreement"};

struct FeatureVector {
  double name_levenshtein_sim = 0.0;
  double name_token_jaccard = 0.0;
  double trigram_cosine = 0.0;
  double log1p_haversine_km = 0.0;
  double location_missing = 0.0;
  double commodity_jaccard = 0.0;
  double shared_attr_agreement = 0.0;

  std::array<double, kFeatureCount> values() const;
  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

/// Symmetric in (a, b).
FeatureVector extract_features(const Record& a, const Record& b,
                               const FeatureSpec& spec);

}  // namespace minerlink
