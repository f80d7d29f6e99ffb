#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace minerlink {

/// ASCII case-fold, whitespace runs collapsed to one space, ends trimmed.
/// Non-ASCII bytes pass through unchanged.
std::string normalize_text(std::string_view s);

/// Code points of `s` (invalid UTF-8 bytes map to themselves).
std::u32string decode_utf8(std::string_view s);

/// Cosine of character-trigram count vectors over normalize_text(a|b).
/// A normalized string shorter than three code points contributes itself as a
/// single gram. Empty input on either side gives 0.
double text_cosine(std::string_view a, std::string_view b);

/// 1 - edit_distance / max_length over code points of the normalized
/// strings; 1 for two empty strings.
double levenshtein_similarity(std::string_view a, std::string_view b);

std::size_t levenshtein_distance(const std::u32string& a, const std::u32string& b);

/// Lower-cased alphanumeric tokens.
std::vector<std::string> word_tokens(std::string_view s);

/// |A ∩ B| / |A ∪ B| over token sets; 0 when both are empty.
double token_jaccard(const std::vector<std::string>& a,
                     const std::vector<std::string>& b);

}  // namespace minerlink
