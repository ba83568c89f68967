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

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

#include "dtg/config.hpp"
#include "dtg/io.hpp"

namespace dtg {
namespace {

TEST(FormatDouble, RoundTripsAndSpecials) {
  for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 31415926.535897932, 5e-324}) {
    EXPECT_EQ(std::strtod(format_double(x).c_str(), nullptr), x) << format_double(x);
  }
  EXPECT_EQ(format_double(0.5), "0.5");
  EXPECT_EQ(format_double(std::numeric_limits<double>::quiet_NaN()), "nan");
  EXPECT_EQ(format_double(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(format_double(-std::numeric_limits<double>::infinity()), "-inf");
}

TEST(Hash, Fnv1aReferenceValues) {
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(hash_hex(0xaf63dc4c8601ec8cULL), "af63dc4c8601ec8c");
  EXPECT_EQ(hash_hex(1), "0000000000000001");
}

TEST(Hash, ConfigHashTracksContent) {
  PhysicalConfig a = reference_config(0.2);
  EXPECT_EQ(config_hash(a), config_hash(reference_config(0.2)));
  a.v = 0.5;
  EXPECT_NE(config_hash(a), config_hash(reference_config(0.2)));
}

TEST(Csv, HeaderRowsAndLineEndings) {
  Table t;
  t.add_column("a", "first");
  t.add_column("b", "second");
  t.add_row({1.0, 0.25});
  t.add_row({-3.0, 1e-20});
  std::ostringstream s;
  write_csv(s, t);
  EXPECT_EQ(s.str(), "a,b\n1,0.25\n-3,1e-20\n");
  EXPECT_THROW(t.add_row({1.0}), std::invalid_argument);
}

TEST(Manifest, HashIgnoresWallClock) {
  RunManifest m;
  m.tool_version = "1";
  m.subcommand = "modes";
  m.config_hash = "abc";
  m.overrides = {{"v", 0.5}};
  m.wall_clock = "2026-01-01T00:00:00Z";
  const std::string h = m.hash();
  m.wall_clock = "2027-01-01T00:00:00Z";
  EXPECT_EQ(m.hash(), h);
  EXPECT_FALSE(m.to_json().contains("wall_clock"));
  EXPECT_TRUE(m.to_json(true).contains("wall_clock"));
  m.overrides = {{"v", 0.4}};
  EXPECT_NE(m.hash(), h);
}

TEST(WriteTable, SidecarDocumentsColumns) {
  const auto dir = std::filesystem::temp_directory_path() / "dtg_test_io";
  std::filesystem::create_directories(dir);
  Table t;
  t.add_column("x", "an input");
  t.add_row({2.0});
  RunManifest m;
  m.subcommand = "test";
  write_table(dir / "t.csv", t, m, {{"note", "n"}});
  std::ifstream csv(dir / "t.csv");
  std::stringstream body;
  body << csv.rdbuf();
  EXPECT_EQ(body.str(), "x\n2\n");
  std::ifstream side(dir / "t.csv.json");
  const auto doc = nlohmann::json::parse(side);
  EXPECT_EQ(doc.at("manifest_hash"), m.hash());
  EXPECT_EQ(doc.at("columns").at(0).at("name"), "x");
  EXPECT_EQ(doc.at("note"), "n");
  std::filesystem::remove_all(dir);
}

TEST(WriteTable, UnwritablePathThrows) {
  Table t;
  t.add_column("x", "");
  EXPECT_THROW(write_table("/dev/null/x.csv", t, RunManifest{}), IoError);
}

}  // namespace
}  // namespace dtg
