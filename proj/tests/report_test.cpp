/*
 * Copyright 2026 The Validity Lab Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <string>

#include "test_support.hpp"
#include "validity_lab/report.hpp"

namespace validity_lab {
namespace {

TEST(ConfigHash, KnownFnvValues) {
  // FNV-1a 64 over the canonical text "{}".
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : std::string("{}")) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char expected[17];
  std::snprintf(expected, sizeof(expected), "%016llx", static_cast<unsigned long long>(h));
  EXPECT_EQ(ConfigHash(nlohmann::json::object()), expected);
  EXPECT_EQ(ConfigHash(nlohmann::json::object()).size(), 16u);
}

TEST(ConfigHash, KeyOrderDoesNotMatter) {
  const auto a = nlohmann::json::parse(R"({"b": 1, "a": [1, 2]})");
  const auto b = nlohmann::json::parse(R"({"a":[1,2],"b":1})");
  EXPECT_EQ(ConfigHash(a), ConfigHash(b));
  EXPECT_NE(ConfigHash(a), ConfigHash(nlohmann::json::parse(R"({"a":[2,1],"b":1})")));
}

TEST(Provenance, StampAndComment) {
  const auto prov = Provenance::Of({{"k", 1}}, 42);
  nlohmann::json doc;
  prov.Stamp(doc);
  EXPECT_EQ(doc["seed"], 42);
  EXPECT_EQ(doc["config_hash"], prov.config_hash);
  EXPECT_EQ(prov.CsvComment(), "# config_hash=" + prov.config_hash + " seed=42\n");
}

TEST(Files, MissingFileIsIoError) {
  try {
    ReadTextFile("/nonexistent/validity_lab/file.csv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIo);
  }
}

TEST(Files, BadJsonIsParseError) {
  const auto dir = testing::FreshDir("report_json");
  WriteTextFile(dir / "bad.json", "{not json");
  try {
    ReadJsonFile(dir / "bad.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kParse);
  }
  WriteJsonFile(dir / "nested" / "ok.json", {{"a", 1}});
  EXPECT_EQ(ReadJsonFile(dir / "nested" / "ok.json")["a"], 1);
}

TEST(Svg, FixedCanvasAndDeterministicText) {
  const std::vector<PlotSeries> series = {{"s", {{0, 0}, {1, 0.5}, {2, 1}}}};
  const auto a = LinePlotSvg(series, "t", "x", "y", "note");
  EXPECT_EQ(a, LinePlotSvg(series, "t", "x", "y", "note"));
  EXPECT_NE(a.find("viewBox=\"0 0 800 600\""), std::string::npos);
  EXPECT_NE(a.find("<polyline"), std::string::npos);
  const auto b = ScatterPlotSvg({{"A<&>", 0.1, 0.6, true}}, "t", "x", "y");
  EXPECT_NE(b.find("A&lt;&amp;&gt;"), std::string::npos);
  EXPECT_NE(b.find("<circle"), std::string::npos);
}

TEST(Svg, EmptyAndDegenerateInputs) {
  EXPECT_NE(LinePlotSvg({}, "t", "x", "y").find("</svg>"), std::string::npos);
  const auto flat = ScatterPlotSvg({{"a", 1, 1, false}, {"b", 1, 1, false}}, "t", "x", "y");
  EXPECT_EQ(flat.find("nan"), std::string::npos);
  EXPECT_EQ(flat.find("inf"), std::string::npos);
}

}  // namespace
}  // namespace validity_lab
