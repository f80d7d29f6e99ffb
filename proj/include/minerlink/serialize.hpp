#pragma once

#include <string>
#include <string_view>

#include "minerlink/records.hpp"

namespace minerlink {

enum class SerialFormat { Prompt, Ditto };

struct SerializedEntity {
  std::string text;
  SerialFormat format;
};

/// The two fixed closing lines of the labeling prompt.
inline constexpr std::string_view kPromptQuestion =
    "Do the two mine descriptions refer to the same real-world mine. Answer "
    "with 'Yes' if they do and 'No' if they do not.";
inline constexpr std::string_view kPromptConstraint = "Answer only in Yes or No.";

/// "attr1:val1 attr2:val2 ...". Throws DataError for a record without
/// attributes.
SerializedEntity serialize_prompt_entity(const Record& r);

/// Four newline-separated lines; no trailing newline.
std::string build_pair_prompt(const Record& a, const Record& b);

/// "[COL]attr1 [VAL]val1 [COL]attr2 [VAL]val2 ...".
SerializedEntity serialize_ditto_entity(const Record& r);

/// "[CLS] <a> [SEP] <b> [SEP]".
std::string serialize_ditto_pair(const Record& a, const Record& b);

}  // namespace minerlink
