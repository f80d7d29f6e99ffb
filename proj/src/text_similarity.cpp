#include "minerlink/text_similarity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace minerlink {

namespace {

bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

char fold(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

bool is_alnum(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
         static_cast<unsigned char>(c) >= 0x80;
}

using Gram = std::uint64_t;

// Sorted multiset of trigrams packed as three 21-bit code points.
std::vector<Gram> trigram_bag(std::string_view text) {
  const std::u32string cps = decode_utf8(normalize_text(text));
  std::vector<Gram> grams;
  auto pack = [](char32_t a, char32_t b, char32_t c) {
    return (Gram(a) << 42) | (Gram(b) << 21) | Gram(c);
  };
  if (cps.empty()) return grams;
  if (cps.size() < 3) {
    // Short strings; the leading 1 bit keeps them apart from full trigrams.
    grams.push_back((Gram(1) << 63) | pack(0, cps[0], cps.size() > 1 ? cps[1] : 0));
    return grams;
  }
  grams.reserve(cps.size() - 2);
  for (std::size_t i = 0; i + 2 < cps.size(); ++i) {
    grams.push_back(pack(cps[i], cps[i + 1], cps[i + 2]));
  }
  std::sort(grams.begin(), grams.end());
  return grams;
}

std::uint64_t sum_squares(const std::vector<Gram>& g) {
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < g.size();) {
    std::size_t j = i;
    while (j < g.size() && g[j] == g[i]) ++j;
    const std::uint64_t c = j - i;
    total += c * c;
    i = j;
  }
  return total;
}

}  // namespace

std::string normalize_text(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (is_space(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(fold(c));
  }
  return out;
}

std::u32string decode_utf8(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto lead = static_cast<unsigned char>(s[i]);
    std::size_t extra = 0;
    char32_t cp = lead;
    if (lead >= 0xC0 && lead < 0xE0) {
      extra = 1;
      cp = lead & 0x1F;
    } else if (lead >= 0xE0 && lead < 0xF0) {
      extra = 2;
      cp = lead & 0x0F;
    } else if (lead >= 0xF0 && lead < 0xF8) {
      extra = 3;
      cp = lead & 0x07;
    }
    bool ok = lead < 0x80 || (extra > 0 && i + extra < s.size());
    for (std::size_t k = 1; ok && k <= extra; ++k) {
      const auto b = static_cast<unsigned char>(s[i + k]);
      if ((b & 0xC0) != 0x80) {
        ok = false;
      } else {
        cp = (cp << 6) | (b & 0x3F);
      }
    }
    if (!ok) {
      out.push_back(lead);
      ++i;
    } else {
      out.push_back(cp);
      i += 1 + extra;
    }
  }
  return out;
}

double text_cosine(std::string_view a, std::string_view b) {
  const auto ga = trigram_bag(a);
  const auto gb = trigram_bag(b);
  if (ga.empty() || gb.empty()) return 0.0;

  std::uint64_t dot = 0;
  std::size_t i = 0, j = 0;
  while (i < ga.size() && j < gb.size()) {
    if (ga[i] < gb[j]) {
      ++i;
    } else if (gb[j] < ga[i]) {
      ++j;
    } else {
      const Gram g = ga[i];
      std::uint64_t ca = 0, cb = 0;
      while (i < ga.size() && ga[i] == g) ++i, ++ca;
      while (j < gb.size() && gb[j] == g) ++j, ++cb;
      dot += ca * cb;
    }
  }
  const double denom = std::sqrt(static_cast<double>(sum_squares(ga)) *
                                 static_cast<double>(sum_squares(gb)));
  return std::clamp(static_cast<double>(dot) / denom, 0.0, 1.0);
}

std::size_t levenshtein_distance(const std::u32string& a, const std::u32string& b) {
  if (a.size() < b.size()) return levenshtein_distance(b, a);
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      const std::size_t sub = diag + (a[i - 1] == b[j - 1] ? 0 : 1);
      row[j] = std::min({up + 1, row[j - 1] + 1, sub});
      diag = up;
    }
  }
  return row[b.size()];
}

double levenshtein_similarity(std::string_view a, std::string_view b) {
  const auto ca = decode_utf8(normalize_text(a));
  const auto cb = decode_utf8(normalize_text(b));
  const std::size_t longest = std::max(ca.size(), cb.size());
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(levenshtein_distance(ca, cb)) /
                   static_cast<double>(longest);
}

std::vector<std::string> word_tokens(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (is_alnum(c)) {
      cur.push_back(fold(c));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

double token_jaccard(const std::vector<std::string>& a,
                     const std::vector<std::string>& b) {
  std::vector<std::string> sa(a), sb(b);
  std::sort(sa.begin(), sa.end());
  sa.erase(std::unique(sa.begin(), sa.end()), sa.end());
  std::sort(sb.begin(), sb.end());
  sb.erase(std::unique(sb.begin(), sb.end()), sb.end());
  if (sa.empty() && sb.empty()) return 0.0;
  std::size_t common = 0;
  std::size_t i = 0, j = 0;
  while (i < sa.size() && j < sb.size()) {
    if (sa[i] < sb[j]) {
      ++i;
    } else if (sb[j] < sa[i]) {
      ++j;
    } else {
      ++common, ++i, ++j;
    }
  }
  const std::size_t uni = sa.size() + sb.size() - common;
  return static_cast<double>(common) / static_cast<double>(uni);
}

}  // namespace minerlink
