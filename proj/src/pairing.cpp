#include "minerlink/pairing.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <istream>
#include <numeric>
#include <ostream>
#include <span>
#include <unordered_set>

#include "minerlink/error.hpp"
#include "minerlink/matcher.hpp"
#include "minerlink/rng.hpp"

namespace minerlink {

PairKey::PairKey(std::string a, std::string b) {
  if (a == b) throw DataError("pair: self-pair on '" + a + "'");
  if (b < a) std::swap(a, b);
  uri_1_ = std::move(a);
  uri_2_ = std::move(b);
}

std::size_t PairKeyHash::operator()(const PairKey& k) const {
  const std::size_t h1 = std::hash<std::string>{}(k.uri_1());
  const std::size_t h2 = std::hash<std::string>{}(k.uri_2());
  return h1 ^ (h2 + 0x9e3779b97f4a7c15ULL + (h1 << 6) + (h1 >> 2));
}

const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::GroundTruth:
      return "GroundTruth";
    case Provenance::LLM:
      return "LLM";
    case Provenance::LLMAbstainDefault:
      return "LLMAbstainDefault";
    case Provenance::Predicted:
      return "Predicted";
  }
  return "?";
}

Provenance provenance_from_string(const std::string& s) {
  if (s == "GroundTruth") return Provenance::GroundTruth;
  if (s == "LLM") return Provenance::LLM;
  if (s == "LLMAbstainDefault") return Provenance::LLMAbstainDefault;
  if (s == "Predicted") return Provenance::Predicted;
  throw DataError("unknown provenance '" + s + "'");
}

std::vector<PairKey> enumerate_pairs(const std::vector<Dataset>& datasets) {
  std::vector<Record> pooled;
  for (const auto& d : datasets) {
    pooled.insert(pooled.end(), d.records.begin(), d.records.end());
  }
  return enumerate_pairs(pooled);
}

std::vector<PairKey> enumerate_pairs(const std::vector<Record>& records,
                                     std::optional<double> max_distance_km) {
  std::vector<const Record*> sorted;
  sorted.reserve(records.size());
  for (const auto& r : records) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(),
            [](const Record* a, const Record* b) { return a->uri < b->uri; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i]->uri == sorted[i - 1]->uri) {
      throw DataError("pairs: duplicate uri '" + sorted[i]->uri + "'");
    }
  }

  const std::size_t n = sorted.size();
  std::vector<PairKey> out;
  if (!max_distance_km) out.reserve(n * (n > 0 ? n - 1 : 0) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (max_distance_km && sorted[i]->location && sorted[j]->location &&
          haversine_km(*sorted[i]->location, *sorted[j]->location) >
              *max_distance_km) {
        continue;
      }
      out.emplace_back(sorted[i]->uri, sorted[j]->uri);
    }
  }
  return out;
}

void SplitSpec::validate() const {
  double total = 0.0;
  for (double f : fractions) {
    if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("split: fraction outside [0,1]");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("split: fractions must sum to 1");
}

std::array<std::size_t, 3> allocate_largest_remainder(
    std::size_t n, const std::array<double, 3>& fractions) {
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> remainder{};
  std::size_t assigned = 0;
  for (std::size_t s = 0; s < 3; ++s) {
    const double quota = fractions[s] * static_cast<double>(n);
    counts[s] = static_cast<std::size_t>(std::floor(quota));
    remainder[s] = quota - std::floor(quota);
    assigned += counts[s];
  }
  std::array<std::size_t, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return remainder[a] > remainder[b];
  });
  // Rounding noise in the fractions can leave the floors off by a few.
  for (std::size_t k = 0; assigned < n; k = (k + 1) % 3) {
    ++counts[order[k]];
    ++assigned;
  }
  for (std::size_t k = 3; assigned > n;) {
    k = (k == 0 ? 3 : k) - 1;
    if (counts[order[k]] > 0) {
      --counts[order[k]];
      --assigned;
    }
  }
  return counts;
}

namespace {

bool by_key(const LabeledPair& a, const LabeledPair& b) { return a.key < b.key; }

}  // namespace

Split stratified_split(std::vector<LabeledPair> pairs, const SplitSpec& spec) {
  spec.validate();
  if (pairs.empty()) throw DataError("split: no pairs");
  std::sort(pairs.begin(), pairs.end(), by_key);

  Rng rng(spec.seed);
  Split out;
  std::array<std::vector<LabeledPair>*, 3> parts{&out.train, &out.val, &out.test};
  for (int cls : {1, 0}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      if (pairs[i].label == cls) idx.push_back(i);
    }
    rng.shuffle(std::span<std::size_t>(idx));
    const auto counts = allocate_largest_remainder(idx.size(), spec.fractions);
    std::size_t pos = 0;
    for (std::size_t s = 0; s < 3; ++s) {
      for (std::size_t k = 0; k < counts[s]; ++k) {
        parts[s]->push_back(pairs[idx[pos++]]);
      }
    }
  }
  for (auto* p : parts) std::sort(p->begin(), p->end(), by_key);
  return out;
}

std::vector<LabeledPair> subsample_sweep(std::vector<LabeledPair> pairs,
                                         std::size_t match_count,
                                         std::size_t nonmatch_count,
                                         std::uint64_t seed) {
  std::sort(pairs.begin(), pairs.end(), by_key);
  std::vector<std::size_t> matches, nonmatches;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    (pairs[i].label == 1 ? matches : nonmatches).push_back(i);
  }
  auto check = [](const char* cls, std::size_t want, std::size_t have) {
    if (want > have) {
      throw DataError(std::string("sweep: ") + cls + " class has " +
                      std::to_string(have) + " pairs, " + std::to_string(want) +
                      " requested (short by " + std::to_string(want - have) + ")");
    }
  };
  check("match", match_count, matches.size());
  check("non-match", nonmatch_count, nonmatches.size());

  Rng rng(seed);
  std::vector<LabeledPair> out;
  out.reserve(match_count + nonmatch_count);
  auto draw = [&](std::vector<std::size_t>& idx, std::size_t k) {
    // Partial Fisher-Yates: the first k slots become the sample.
    for (std::size_t i = 0; i < k; ++i) {
      const auto j = i + static_cast<std::size_t>(rng.below(idx.size() - i));
      std::swap(idx[i], idx[j]);
      out.push_back(pairs[idx[i]]);
    }
  };
  draw(matches, match_count);
  draw(nonmatches, nonmatch_count);
  std::sort(out.begin(), out.end(), by_key);
  return out;
}

nlohmann::json to_json(const LabeledPair& p) {
  nlohmann::json j{{"uri_1", p.key.uri_1()},
                   {"uri_2", p.key.uri_2()},
                   {"label", p.label},
                   {"provenance", to_string(p.provenance)}};
  if (p.raw_response) j["raw_response"] = *p.raw_response;
  return j;
}

LabeledPair labeled_pair_from_json(const nlohmann::json& j) {
  try {
    LabeledPair p{PairKey(j.at("uri_1").get<std::string>(),
                          j.at("uri_2").get<std::string>())};
    p.label = j.at("label").get<int>();
    if (p.label != 0 && p.label != 1) {
      throw DataError("labeled pair: label must be 0 or 1");
    }
    p.provenance = provenance_from_string(j.value("provenance", std::string("GroundTruth")));
    if (j.contains("raw_response") && !j.at("raw_response").is_null()) {
      p.raw_response = j.at("raw_response").get<std::string>();
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("labeled pair: ") + e.what());
  }
}

namespace {

template <class F>
void for_each_json_line(std::istream& in, F&& f) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError("line " + std::to_string(lineno) + ": " + e.what());
    }
    f(j);
  }
}

}  // namespace

void write_labeled_pairs(std::ostream& out, const std::vector<LabeledPair>& pairs) {
  for (const auto& p : pairs) out << to_json(p).dump() << '\n';
}

std::vector<LabeledPair> read_labeled_pairs(std::istream& in) {
  std::vector<LabeledPair> out;
  for_each_json_line(in, [&](const nlohmann::json& j) {
    out.push_back(labeled_pair_from_json(j));
  });
  return out;
}

void write_pair_keys(std::ostream& out, const std::vector<PairKey>& keys) {
  for (const auto& k : keys) {
    out << nlohmann::json{{"uri_1", k.uri_1()}, {"uri_2", k.uri_2()}}.dump() << '\n';
  }
}

std::vector<PairKey> read_pair_keys(std::istream& in) {
  std::vector<PairKey> out;
  for_each_json_line(in, [&](const nlohmann::json& j) {
    try {
      out.emplace_back(j.at("uri_1").get<std::string>(), j.at("uri_2").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("pair key: ") + e.what());
    }
  });
  return out;
}

}  // namespace minerlink
