#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace minerlink::csv {

using Row = std::vector<std::string>;

/// RFC-4180 reader: quoted fields may hold delimiters, doubled quotes and line
/// breaks; CRLF and LF both end a row. A leading UTF-8 BOM is skipped. Blank
/// lines are dropped. Throws DataError on an unterminated quote.
std::vector<Row> parse(std::string_view text, char delimiter = ',');

/// Quotes a field only when it needs it.
std::string escape_field(std::string_view field, char delimiter = ',');

std::string format_row(const Row& row, char delimiter = ',');

}  // namespace minerlink::csv
