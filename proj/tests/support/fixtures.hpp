#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "minerlink/records.hpp"

namespace minerlink::testing {

inline std::filesystem::path fixture_path(const std::string& name) {
  return std::filesystem::path(MINERLINK_FIXTURE_DIR) / name;
}

inline std::string read_fixture(const std::string& name) {
  std::ifstream in(fixture_path(name), std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// The two golden records (golden/records.jsonl).
inline std::vector<Record> golden_records() {
  std::istringstream in(read_fixture("golden/records.jsonl"));
  std::vector<Record> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(record_from_json(nlohmann::json::parse(line)));
  }
  return out;
}

}  // namespace minerlink::testing
