#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

namespace minerlink {

/// A point in decimal degrees. Construct through GeoPoint::make to get range
/// checking; the raw aggregate is used by tests that need invalid points.
struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;

  static std::optional<GeoPoint> make(double lat, double lon);
  bool valid() const;
  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

struct Attribute {
  std::string name;
  std::string value;
  friend bool operator==(const Attribute&, const Attribute&) = default;
};

/// One row of a source database. Attributes hold only non-null cells, in
/// source column order.
struct Record {
  std::string uri;
  std::string source_id;
  std::vector<Attribute> attributes;
  std::optional<GeoPoint> location;

  /// Value of attribute `name`, if present.
  const std::string* find(std::string_view name) const;

  friend bool operator==(const Record&, const Record&) = default;
};

struct SchemaConfig {
  std::optional<std::string> id_column;
  std::optional<std::string> lat_column;
  std::optional<std::string> lon_column;
  std::vector<std::string> exclude_columns;
  std::vector<std::string> null_markers{""};
  // The id column is excluded from attributes unless this is set.
  bool include_id_in_payload = false;
  char delimiter = ',';

  static SchemaConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  friend bool operator==(const SchemaConfig&, const SchemaConfig&) = default;
};

struct Dataset {
  std::string source_id;
  std::vector<Record> records;
  SchemaConfig schema;
  /// Header as read, used when exporting back to delimited text.
  std::vector<std::string> columns;
  /// Rows whose coordinates were present but unusable.
  std::size_t coordinate_warnings = 0;
};

/// Parses `path` into a Dataset. Throws SchemaError when a declared column is
/// missing and DataError on malformed text.
Dataset ingest_csv(const std::filesystem::path& path, std::string source_id,
                   SchemaConfig schema);

/// Same as ingest_csv but from in-memory text.
Dataset ingest_csv_text(std::string_view text, std::string source_id,
                        SchemaConfig schema);

/// Writes the dataset in the layout ingest_csv expects. Excluded columns are
/// lost; re-ingesting with the same schema reproduces the records.
std::string export_csv(const Dataset& d);

struct ValidationReport {
  std::size_t record_count = 0;
  std::size_t missing_location = 0;
  std::size_t duplicate_uris = 0;
  std::vector<std::string> errors;
};

ValidationReport validate_dataset(const Dataset& d);

/// uri -> record index over several datasets. Throws DataError on a
/// duplicate uri.
class RecordIndex {
 public:
  RecordIndex() = default;
  explicit RecordIndex(const std::vector<Dataset>& datasets);
  explicit RecordIndex(std::vector<Record> records);

  const Record* find(std::string_view uri) const;
  const Record& at(std::string_view uri) const;
  const std::vector<Record>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }

 private:
  void build();

  std::vector<Record> records_;
  std::unordered_map<std::string, std::size_t> by_uri_;
};

/// Records as JSON Lines (used for the ingest artifact).
nlohmann::json record_to_json(const Record& r);
Record record_from_json(const nlohmann::json& j);

}  // namespace minerlink
