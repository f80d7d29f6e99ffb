#include "minerlink/records.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "minerlink/csv.hpp"
#include "minerlink/error.hpp"

namespace minerlink {

std::optional<GeoPoint> GeoPoint::make(double lat, double lon) {
  GeoPoint p{lat, lon};
  if (!p.valid()) return std::nullopt;
  return p;
}

bool GeoPoint::valid() const {
  return std::isfinite(lat) && std::isfinite(lon) && lat >= -90.0 &&
         lat <= 90.0 && lon >= -180.0 && lon <= 180.0;
}

const std::string* Record::find(std::string_view name) const {
  for (const auto& a : attributes) {
    if (a.name == name) return &a.value;
  }
  return nullptr;
}

SchemaConfig SchemaConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("schema: expected a JSON object");
  SchemaConfig s;
  auto opt_string = [&](const char* key) -> std::optional<std::string> {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    if (!j.at(key).is_string()) {
      throw ConfigError(std::string("schema: '") + key + "' must be a string");
    }
    return j.at(key).get<std::string>();
  };
  try {
    s.id_column = opt_string("id_column");
    s.lat_column = opt_string("lat_column");
    s.lon_column = opt_string("lon_column");
    if (j.contains("exclude_columns")) {
      s.exclude_columns = j.at("exclude_columns").get<std::vector<std::string>>();
    }
    if (j.contains("null_markers")) {
      s.null_markers = j.at("null_markers").get<std::vector<std::string>>();
    }
    s.include_id_in_payload = j.value("include_id_in_payload", false);
    if (j.contains("delimiter")) {
      const auto d = j.at("delimiter").get<std::string>();
      if (d.size() != 1) throw ConfigError("schema: delimiter must be one character");
      s.delimiter = d.front();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("schema: ") + e.what());
  }
  if (s.lat_column.has_value() != s.lon_column.has_value()) {
    throw ConfigError("schema: lat_column and lon_column must be set together");
  }
  return s;
}

nlohmann::json SchemaConfig::to_json() const {
  nlohmann::json j;
  j["id_column"] = id_column ? nlohmann::json(*id_column) : nlohmann::json();
  j["lat_column"] = lat_column ? nlohmann::json(*lat_column) : nlohmann::json();
  j["lon_column"] = lon_column ? nlohmann::json(*lon_column) : nlohmann::json();
  j["exclude_columns"] = exclude_columns;
  j["null_markers"] = null_markers;
  j["include_id_in_payload"] = include_id_in_payload;
  j["delimiter"] = std::string(1, delimiter);
  return j;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::optional<double> parse_degrees(std::string_view text) {
  text = trim(text);
  if (text.starts_with('+')) text.remove_prefix(1);
  if (text.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  if (!std::isfinite(v)) return std::nullopt;
  return v;
}

std::size_t column_index(const csv::Row& header, const std::string& name) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) {
    throw SchemaError("schema: declared column '" + name +
                      "' is not in the header");
  }
  return static_cast<std::size_t>(it - header.begin());
}

bool contains(const std::vector<std::string>& v, std::string_view s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

Dataset ingest_csv_text(std::string_view text, std::string source_id,
                        SchemaConfig schema) {
  if (source_id.empty()) throw ConfigError("ingest: empty source_id");
  auto rows = csv::parse(text, schema.delimiter);
  if (rows.empty()) throw DataError("ingest: missing header row");

  Dataset d;
  d.source_id = std::move(source_id);
  d.columns = rows.front();

  {
    std::unordered_set<std::string> seen;
    for (const auto& c : d.columns) {
      if (!seen.insert(c).second) {
        throw DataError("ingest: duplicate header column '" + c + "'");
      }
    }
  }

  std::optional<std::size_t> id_idx, lat_idx, lon_idx;
  if (schema.id_column) id_idx = column_index(d.columns, *schema.id_column);
  if (schema.lat_column) lat_idx = column_index(d.columns, *schema.lat_column);
  if (schema.lon_column) lon_idx = column_index(d.columns, *schema.lon_column);

  if (schema.id_column && !schema.include_id_in_payload &&
      !contains(schema.exclude_columns, *schema.id_column)) {
    schema.exclude_columns.push_back(*schema.id_column);
  }

  std::vector<bool> keep(d.columns.size());
  for (std::size_t c = 0; c < d.columns.size(); ++c) {
    keep[c] = !contains(schema.exclude_columns, d.columns[c]);
  }
  auto is_null = [&](const std::string& v) {
    return contains(schema.null_markers, v);
  };

  d.records.reserve(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    auto& row = rows[r];
    if (row.size() != d.columns.size()) {
      throw DataError("ingest: row " + std::to_string(r) + " has " +
                      std::to_string(row.size()) + " fields, header has " +
                      std::to_string(d.columns.size()));
    }
    Record rec;
    rec.source_id = d.source_id;
    if (id_idx) {
      const auto& id = row[*id_idx];
      if (is_null(id)) {
        throw DataError("ingest: row " + std::to_string(r) +
                        " has a null identifier");
      }
      rec.uri = d.source_id + ":" + id;
    } else {
      rec.uri = d.source_id + ":row" + std::to_string(r);
    }

    if (lat_idx && lon_idx) {
      const auto& lat_text = row[*lat_idx];
      const auto& lon_text = row[*lon_idx];
      if (!is_null(lat_text) || !is_null(lon_text)) {
        const auto lat = is_null(lat_text) ? std::nullopt : parse_degrees(lat_text);
        const auto lon = is_null(lon_text) ? std::nullopt : parse_degrees(lon_text);
        if (lat && lon) rec.location = GeoPoint::make(*lat, *lon);
        if (!rec.location) ++d.coordinate_warnings;
      }
    }

    for (std::size_t c = 0; c < row.size(); ++c) {
      if (!keep[c] || is_null(row[c])) continue;
      rec.attributes.push_back({d.columns[c], std::move(row[c])});
    }
    d.records.push_back(std::move(rec));
  }
  d.schema = std::move(schema);
  return d;
}

Dataset ingest_csv(const std::filesystem::path& path, std::string source_id,
                   SchemaConfig schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("ingest: cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return ingest_csv_text(buf.str(), std::move(source_id), std::move(schema));
}

namespace {

std::string format_degrees(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

std::string export_csv(const Dataset& d) {
  const auto& s = d.schema;
  const std::string null_text = s.null_markers.empty() ? "" : s.null_markers.front();
  const std::string prefix = d.source_id + ":";

  csv::Row header;
  for (const auto& c : d.columns) {
    const bool special = c == s.id_column || c == s.lat_column || c == s.lon_column;
    if (special || !contains(s.exclude_columns, c)) header.push_back(c);
  }
  std::string out = csv::format_row(header, s.delimiter);

  for (const auto& rec : d.records) {
    csv::Row row;
    row.reserve(header.size());
    for (const auto& c : header) {
      if (const auto* v = rec.find(c)) {
        row.push_back(*v);
      } else if (c == s.id_column) {
        row.push_back(rec.uri.starts_with(prefix) ? rec.uri.substr(prefix.size())
                                                  : rec.uri);
      } else if (c == s.lat_column && rec.location) {
        row.push_back(format_degrees(rec.location->lat));
      } else if (c == s.lon_column && rec.location) {
        row.push_back(format_degrees(rec.location->lon));
      } else {
        row.push_back(null_text);
      }
    }
    out += csv::format_row(row, s.delimiter);
  }
  return out;
}

ValidationReport validate_dataset(const Dataset& d) {
  ValidationReport rep;
  rep.record_count = d.records.size();
  std::unordered_set<std::string> seen;
  for (const auto& r : d.records) {
    if (!r.location) ++rep.missing_location;
    if (!seen.insert(r.uri).second) {
      ++rep.duplicate_uris;
      rep.errors.push_back("duplicate uri '" + r.uri + "'");
    }
  }
  return rep;
}

RecordIndex::RecordIndex(const std::vector<Dataset>& datasets) {
  for (const auto& d : datasets) {
    records_.insert(records_.end(), d.records.begin(), d.records.end());
  }
  build();
}

RecordIndex::RecordIndex(std::vector<Record> records)
    : records_(std::move(records)) {
  build();
}

void RecordIndex::build() {
  by_uri_.reserve(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (!by_uri_.emplace(records_[i].uri, i).second) {
      throw DataError("duplicate uri '" + records_[i].uri + "'");
    }
  }
}

const Record* RecordIndex::find(std::string_view uri) const {
  const auto it = by_uri_.find(std::string(uri));
  return it == by_uri_.end() ? nullptr : &records_[it->second];
}

const Record& RecordIndex::at(std::string_view uri) const {
  if (const auto* r = find(uri)) return *r;
  throw DataError("unknown uri '" + std::string(uri) + "'");
}

nlohmann::json record_to_json(const Record& r) {
  nlohmann::json attrs = nlohmann::json::array();
  for (const auto& a : r.attributes) attrs.push_back({a.name, a.value});
  nlohmann::json j{{"uri", r.uri}, {"source_id", r.source_id}, {"attributes", attrs}};
  if (r.location) {
    j["location"] = {{"lat", r.location->lat}, {"lon", r.location->lon}};
  } else {
    j["location"] = nullptr;
  }
  return j;
}

Record record_from_json(const nlohmann::json& j) {
  try {
    Record r;
    r.uri = j.at("uri").get<std::string>();
    r.source_id = j.at("source_id").get<std::string>();
    for (const auto& a : j.at("attributes")) {
      r.attributes.push_back({a.at(0).get<std::string>(), a.at(1).get<std::string>()});
    }
    if (j.contains("location") && !j.at("location").is_null()) {
      r.location = GeoPoint::make(j.at("location").at("lat").get<double>(),
                                  j.at("location").at("lon").get<double>());
      if (!r.location) throw DataError("record '" + r.uri + "': location out of range");
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("record json: ") + e.what());
  }
}

}  // namespace minerlink
