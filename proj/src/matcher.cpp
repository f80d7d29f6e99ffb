#include "minerlink/matcher.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "minerlink/error.hpp"
#include "minerlink/serialize.hpp"
#include "minerlink/text_similarity.hpp"

namespace minerlink {

double haversine_km(const GeoPoint& p1, const GeoPoint& p2) {
  if (!p1.valid() || !p2.valid()) throw DataError("haversine: coordinate out of range");
  constexpr double rad = std::numbers::pi / 180.0;
  const double phi1 = p1.lat * rad;
  const double phi2 = p2.lat * rad;
  const double s_dphi = std::sin((p2.lat - p1.lat) * rad / 2.0);
  const double s_dlam = std::sin((p2.lon - p1.lon) * rad / 2.0);
  const double h = s_dphi * s_dphi + std::cos(phi1) * std::cos(phi2) * s_dlam * s_dlam;
  return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(std::clamp(h, 0.0, 1.0)));
}

void RuleConfig::validate() const {
  if (!(max_distance_km > 0.0) || !std::isfinite(max_distance_km)) {
    throw ConfigError("rule: max_distance_km must be positive");
  }
  if (!(min_cosine >= 0.0 && min_cosine <= 1.0)) {
    throw ConfigError("rule: min_cosine must lie in [0,1]");
  }
}

RuleConfig RuleConfig::from_json(const nlohmann::json& j) {
  RuleConfig c;
  try {
    c.max_distance_km = j.value("max_distance_km", c.max_distance_km);
    c.min_cosine = j.value("min_cosine", c.min_cosine);
    const auto policy = j.value("missing_location_policy", std::string("TextOnly"));
    if (policy == "TextOnly") {
      c.missing_location_policy = MissingLocationPolicy::TextOnly;
    } else if (policy == "Reject") {
      c.missing_location_policy = MissingLocationPolicy::Reject;
    } else {
      throw ConfigError("rule: unknown missing_location_policy '" + policy + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("rule: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json RuleConfig::to_json() const {
  return {{"max_distance_km", max_distance_km},
          {"min_cosine", min_cosine},
          {"missing_location_policy",
           missing_location_policy == MissingLocationPolicy::TextOnly ? "TextOnly" : "Reject"}};
}

FeatureSpec FeatureSpec::from_json(const nlohmann::json& j) {
  FeatureSpec s;
  try {
    if (j.contains("name_fields")) s.name_fields = j.at("name_fields").get<std::vector<std::string>>();
    if (j.contains("source_name_fields")) {
      s.source_name_fields =
          j.at("source_name_fields").get<std::map<std::string, std::vector<std::string>>>();
    }
    if (j.contains("commodity_prefixes")) {
      s.commodity_prefixes = j.at("commodity_prefixes").get<std::vector<std::string>>();
    }
    if (j.contains("agreement_exclude")) {
      s.agreement_exclude = j.at("agreement_exclude").get<std::vector<std::string>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("feature_spec: ") + e.what());
  }
  return s;
}

nlohmann::json FeatureSpec::to_json() const {
  return {{"name_fields", name_fields},
          {"source_name_fields", source_name_fields},
          {"commodity_prefixes", commodity_prefixes},
          {"agreement_exclude", agreement_exclude}};
}

namespace {

const std::vector<std::string>& name_fields_for(const Record& r, const FeatureSpec& spec) {
  const auto it = spec.source_name_fields.find(r.source_id);
  return it == spec.source_name_fields.end() ? spec.name_fields : it->second;
}

bool is_name_field(const Record& r, const std::string& attr, const FeatureSpec& spec) {
  const auto& fields = name_fields_for(r, spec);
  return std::find(fields.begin(), fields.end(), attr) != fields.end();
}

bool is_commodity_field(std::string_view attr, const FeatureSpec& spec) {
  const std::string folded = normalize_text(attr);
  for (const auto& p : spec.commodity_prefixes) {
    if (folded.starts_with(normalize_text(p))) return true;
  }
  return false;
}

template <class F>
double best_over_names(const std::vector<std::string>& na,
                       const std::vector<std::string>& nb, F&& sim) {
  double best = 0.0;
  for (const auto& x : na) {
    for (const auto& y : nb) best = std::max(best, sim(x, y));
  }
  return best;
}

std::vector<std::string> commodity_tokens(const Record& r, const FeatureSpec& spec) {
  std::vector<std::string> out;
  for (const auto& a : r.attributes) {
    if (!is_commodity_field(a.name, spec)) continue;
    auto toks = word_tokens(a.value);
    out.insert(out.end(), toks.begin(), toks.end());
  }
  return out;
}

double shared_attr_agreement(const Record& a, const Record& b, const FeatureSpec& spec) {
  std::size_t shared = 0;
  std::size_t agree = 0;
  for (const auto& attr : a.attributes) {
    if (is_name_field(a, attr.name, spec) || is_name_field(b, attr.name, spec) ||
        is_commodity_field(attr.name, spec) ||
        std::find(spec.agreement_exclude.begin(), spec.agreement_exclude.end(),
                  attr.name) != spec.agreement_exclude.end()) {
      continue;
    }
    const std::string* other = b.find(attr.name);
    if (other == nullptr) continue;
    ++shared;
    if (normalize_text(attr.value) == normalize_text(*other)) ++agree;
  }
  return shared == 0 ? 0.0 : static_cast<double>(agree) / static_cast<double>(shared);
}

}  // namespace

std::vector<std::string> name_texts(const Record& r, const FeatureSpec& spec) {
  std::vector<std::string> out;
  for (const auto& field : name_fields_for(r, spec)) {
    if (const auto* v = r.find(field)) out.push_back(*v);
  }
  if (out.empty() && !r.attributes.empty()) {
    out.push_back(serialize_prompt_entity(r).text);
  }
  return out;
}

double best_name_cosine(const Record& a, const Record& b, const FeatureSpec& spec) {
  return best_over_names(name_texts(a, spec), name_texts(b, spec),
                         [](const std::string& x, const std::string& y) {
                           return text_cosine(x, y);
                         });
}

bool rule_distance_clause(const Record& a, const Record& b, const RuleConfig& cfg) {
  if (!a.location || !b.location) {
    return cfg.missing_location_policy == MissingLocationPolicy::TextOnly;
  }
  return haversine_km(*a.location, *b.location) <= cfg.max_distance_km;
}

bool rule_text_clause(const Record& a, const Record& b, const RuleConfig& cfg,
                      const FeatureSpec& spec) {
  return best_name_cosine(a, b, spec) >= cfg.min_cosine;
}

int rule_match(const Record& a, const Record& b, const RuleConfig& cfg,
               const FeatureSpec& spec) {
  return rule_distance_clause(a, b, cfg) && rule_text_clause(a, b, cfg, spec) ? 1 : 0;
}

std::array<double, kFeatureCount> FeatureVector::values() const {
  return {name_levenshtein_sim, name_token_jaccard, trigram_cosine, log1p_haversine_km,
          location_missing,     commodity_jaccard,  shared_attr_agreement};
}

FeatureVector extract_features(const Record& a, const Record& b,
                               const FeatureSpec& spec) {
  FeatureVector f;
  const auto na = name_texts(a, spec);
  const auto nb = name_texts(b, spec);
  f.name_levenshtein_sim = best_over_names(
      na, nb, [](const std::string& x, const std::string& y) {
        return levenshtein_similarity(x, y);
      });
  f.name_token_jaccard = best_over_names(
      na, nb, [](const std::string& x, const std::string& y) {
        return token_jaccard(word_tokens(x), word_tokens(y));
      });
  f.trigram_cosine = best_over_names(
      na, nb, [](const std::string& x, const std::string& y) { return text_cosine(x, y); });

  if (a.location && b.location) {
    f.log1p_haversine_km = std::log1p(haversine_km(*a.location, *b.location));
  } else {
    f.location_missing = 1.0;
  }

  const auto ca = commodity_tokens(a, spec);
  const auto cb = commodity_tokens(b, spec);
  f.commodity_jaccard = (ca.empty() || cb.empty()) ? 0.0 : token_jaccard(ca, cb);
  f.shared_attr_agreement = shared_attr_agreement(a, b, spec);
  return f;
}

}  // namespace minerlink
