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

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dtg/config.hpp"

namespace dtg {

/// Shortest decimal that round-trips to the same double; "nan", "inf", "-inf"
/// for non-finite values.
std::string format_double(double value);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);
std::string hash_hex(std::uint64_t hash);

/// Hash of the canonical configuration serialization.
std::string config_hash(const PhysicalConfig& config);

/// Column-oriented numeric table with one description per column.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::string> descriptions;
  std::vector<std::vector<double>> rows;

  void add_column(std::string name, std::string description);
  void add_row(std::vector<double> row);
};

/// RFC 4180 style: header row, comma separators, LF line endings.
void write_csv(std::ostream& out, const Table& table);

struct RunManifest {
  std::string tool_version;
  std::string subcommand;
  std::string config_hash;
  /// Flag overrides in command-line order.
  std::vector<std::pair<std::string, double>> overrides;
  /// Other arguments that affect outputs (seed, grids, ...).
  nlohmann::json parameters = nlohmann::json::object();
  std::vector<std::string> outputs;
  std::string wall_clock;

  /// Wall-clock time is left out unless requested, so the hash and every
  /// data file stay reproducible.
  nlohmann::json to_json(bool include_wall_clock = false) const;
  std::string hash() const;
};

/// Current UTC time, ISO 8601.
std::string utc_timestamp();

/// Writes `doc` with two-space indentation and a trailing newline.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc);
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// Writes `table` to `path` and a `<path>.json` sidecar with the manifest
/// hash, column documentation and `extra`.
void write_table(const std::filesystem::path& path, const Table& table, const RunManifest& manifest,
                 const nlohmann::json& extra = nlohmann::json::object());

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dtg
