#include "toda/io.hpp"

#include <fstream>
#include <sstream>

#include "toda/error.hpp"
#include "toda/numeric.hpp"

namespace toda::io {

void Table::add(std::vector<std::string> row) {
  if (row.size() != columns.size()) fail(ErrorCode::Internal, "table row width does not match the header");
  rows.push_back(std::move(row));
}

std::size_t Table::index(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return i;
  fail(ErrorCode::InvalidInput, "missing column '" + name + "'");
}

std::vector<double> Table::numbers(const std::string& name) const {
  const auto c = index(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(std::stod(r[c]));
  return out;
}

std::string cell(double x) { return num::format_double(x); }
std::string cell(long x) { return std::to_string(x); }

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::InvalidInput, "cannot write '" + path.string() + "'");
  return out;
}

void join(std::ostream& os, const std::vector<std::string>& v) {
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  os << '\n';
}

}  // namespace

void write_csv(const std::filesystem::path& path, const Meta& meta, const Table& t) {
  auto out = open_out(path);
  out << "# schema_version=" << kSchemaVersion << '\n';
  out << "# config_hash=" << meta.config_hash << '\n';
  out << "# command=" << meta.command << '\n';
  join(out, t.columns);
  for (const auto& r : t.rows) join(out, r);
  if (!out) fail(ErrorCode::InvalidInput, "write failed for '" + path.string() + "'");
}

Table read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::InvalidInput, "missing input '" + path.string() + "'");
  Table t;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    if (line.back() == ',') cells.emplace_back();
    if (header) {
      t.columns = cells;
      header = false;
    } else {
      if (cells.size() != t.columns.size()) fail(ErrorCode::InvalidInput, "ragged row in '" + path.string() + "'");
      t.rows.push_back(cells);
    }
  }
  if (header) fail(ErrorCode::InvalidInput, "no header in '" + path.string() + "'");
  return t;
}

void write_json(const std::filesystem::path& path, const Meta& meta, nlohmann::ordered_json body) {
  nlohmann::ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["config_hash"] = meta.config_hash;
  j["command"] = meta.command;
  for (auto& [k, v] : body.items()) j[k] = v;
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  if (!out) fail(ErrorCode::InvalidInput, "write failed for '" + path.string() + "'");
}

}  // namespace toda::io
