#include "minerlink/serialize.hpp"

#include "minerlink/error.hpp"

namespace minerlink {

namespace {

void require_attributes(const Record& r) {
  if (r.attributes.empty()) {
    throw DataError("serialize: record '" + r.uri + "' has no attributes");
  }
}

// Line breaks inside a value would change the prompt's line structure.
void append_single_line(std::string& out, std::string_view value) {
  for (char c : value) out.push_back(c == '\n' || c == '\r' ? ' ' : c);
}

}  // namespace

SerializedEntity serialize_prompt_entity(const Record& r) {
  require_attributes(r);
  std::string out;
  for (const auto& a : r.attributes) {
    if (!out.empty()) out.push_back(' ');
    out += a.name;
    out.push_back(':');
    append_single_line(out, a.value);
  }
  return {std::move(out), SerialFormat::Prompt};
}

std::string build_pair_prompt(const Record& a, const Record& b) {
  std::string out = "Entity A is ";
  out += serialize_prompt_entity(a).text;
  out += ".\nEntity B is ";
  out += serialize_prompt_entity(b).text;
  out += ".\n";
  out += kPromptQuestion;
  out.push_back('\n');
  out += kPromptConstraint;
  return out;
}

SerializedEntity serialize_ditto_entity(const Record& r) {
  require_attributes(r);
  std::string out;
  for (const auto& a : r.attributes) {
    if (!out.empty()) out.push_back(' ');
    out += "[COL]";
    out += a.name;
    out += " [VAL]";
    out += a.value;
  }
  return {std::move(out), SerialFormat::Ditto};
}

std::string serialize_ditto_pair(const Record& a, const Record& b) {
  return "[CLS] " + serialize_ditto_entity(a).text + " [SEP] " +
         serialize_ditto_entity(b).text + " [SEP]";
}

}  // namespace minerlink
