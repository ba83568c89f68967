// Copyright 2026 The dtg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dtg/io.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>

namespace dtg {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hash_hex(std::uint64_t hash) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = digits[hash & 0xf];
    hash >>= 4;
  }
  return s;
}

std::string config_hash(const PhysicalConfig& config) { return hash_hex(fnv1a(serialize_config(config))); }

void Table::add_column(std::string name, std::string description) {
  columns.push_back(std::move(name));
  descriptions.push_back(std::move(description));
}

void Table::add_row(std::vector<double> row) {
  if (row.size() != columns.size()) throw std::invalid_argument("table row width does not match the header");
  rows.push_back(std::move(row));
}

void write_csv(std::ostream& out, const Table& table) {
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    if (i) out << ',';
    out << table.columns[i];
  }
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << format_double(row[i]);
    }
    out << '\n';
  }
}

nlohmann::json RunManifest::to_json(bool include_wall_clock) const {
  nlohmann::json doc;
  doc["tool"] = "dtg";
  doc["tool_version"] = tool_version;
  doc["subcommand"] = subcommand;
  doc["config_hash"] = config_hash;
  nlohmann::json ov = nlohmann::json::array();
  for (const auto& [k, v] : overrides) ov.push_back({{"key", k}, {"value", v}});
  doc["overrides"] = ov;
  doc["parameters"] = parameters;
  doc["outputs"] = outputs;
  if (include_wall_clock) doc["wall_clock"] = wall_clock;
  return doc;
}

std::string RunManifest::hash() const { return hash_hex(fnv1a(to_json(false).dump())); }

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc) {
  write_text_file(path, doc.dump(2) + "\n");
}

void write_table(const std::filesystem::path& path, const Table& table, const RunManifest& manifest,
                 const nlohmann::json& extra) {
  std::ostringstream csv;
  write_csv(csv, table);
  write_text_file(path, csv.str());
  nlohmann::json side;
  side["manifest_hash"] = manifest.hash();
  side["config_hash"] = manifest.config_hash;
  nlohmann::json cols = nlohmann::json::array();
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    cols.push_back({{"name", table.columns[i]}, {"description", table.descriptions[i]}});
  }
  side["columns"] = cols;
  side["rows"] = table.rows.size();
  for (const auto& [k, v] : extra.items()) side[k] = v;
  write_json_file(path.string() + ".json", side);
}

}  // namespace dtg
