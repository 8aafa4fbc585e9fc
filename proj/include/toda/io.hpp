#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace toda::io {

inline constexpr int kSchemaVersion = 1;

struct Meta {
  std::string config_hash;
  std::string command;
};

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row);
  /// Column by name; throws if missing.
  std::size_t index(const std::string& name) const;
  std::vector<double> numbers(const std::string& name) const;
};

/// Shortest round-trip text of a double.
std::string cell(double x);
std::string cell(long x);
inline std::string cell(int x) { return cell(static_cast<long>(x)); }
inline std::string cell(bool x) { return x ? "true" : "false"; }
inline std::string cell(const std::string& s) { return s; }
inline std::string cell(const char* s) { return s; }

/// CSV with "# schema_version", "# config_hash" and "# command" comment lines.
void write_csv(const std::filesystem::path& path, const Meta& meta, const Table& t);
/// Skips comment lines; the first remaining line is the header.
Table read_csv(const std::filesystem::path& path);

/// JSON object with schema_version and config_hash fields added.
void write_json(const std::filesystem::path& path, const Meta& meta, nlohmann::ordered_json body);

}  // namespace toda::io
