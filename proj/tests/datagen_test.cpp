// Copyright 2026 The hids Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <map>
#include <set>

#include "hids/datagen.hpp"
#include "hids/error.hpp"
#include "hids/schema.hpp"
#include "support.hpp"

namespace hids {
namespace {

ScenarioSpec small(std::uint64_t seed = 3) {
  ScenarioSpec s;
  s.duration = 120.0;
  s.background_rate = 5.0;
  s.entity_count = 12;
  s.seed = seed;
  return s;
}

std::vector<FlowRecord> parse(const GeneratedData& d) { return parse_flow_csv_text(d.csv, d.schema); }

TEST(Generate, NoAttacksMeansAllNormal) {
  const GeneratedData d = generate(small());
  EXPECT_EQ(d.label_counts.at("Normal"), d.flows);
  EXPECT_GT(d.flows, 400u);
  for (const auto& r : parse(d)) EXPECT_EQ(r.label, "Normal");
}

TEST(Generate, DdosBurstDwarfsBackground) {
  ScenarioSpec s = small();
  s.attacks.push_back({AttackType::kDdos, 50.0, 10.0, 50.0, std::nullopt});
  const auto records = parse(generate(s));
  std::size_t inside = 0, before = 0;
  for (const auto& r : records) {
    if (r.timestamp >= 50.0 && r.timestamp < 60.0) ++inside;
    if (r.timestamp >= 30.0 && r.timestamp < 40.0) ++before;
  }
  EXPECT_GE(inside, 10 * before);
}

TEST(Generate, RateInsideTheAttackMatchesIntensity) {
  ScenarioSpec s = small(11);
  s.duration = 600.0;
  const double intensity = 4.0;
  s.attacks.push_back({AttackType::kDdos, 200.0, 100.0, intensity, std::nullopt});
  const auto records = parse(generate(s));
  double inside = 0, outside = 0;
  for (const auto& r : records) (r.timestamp >= 200.0 && r.timestamp < 300.0 ? inside : outside) += 1;
  const double outside_rate = outside / 500.0;
  const double expected = (1.0 + intensity) * outside_rate * 100.0;
  EXPECT_LT(std::abs(inside - expected), 3.0 * std::sqrt(expected));
}

TEST(Generate, SameSeedIsBitIdentical) {
  ScenarioSpec s = small();
  s.attacks.push_back({AttackType::kPortScan, 10.0, 20.0, 3.0, std::nullopt});
  s.attacks.push_back({AttackType::kBackdoorBeacon, 30.0, 60.0, 1.0, std::nullopt});
  s.missing_rate = 0.05;
  EXPECT_EQ(generate(s).csv, generate(s).csv);
  ScenarioSpec other = s;
  other.seed = 4;
  EXPECT_NE(generate(other).csv, generate(s).csv);
}

TEST(Generate, LabelCountsSurviveParsing) {
  const ScenarioSpec s = default_scenario(2);
  const GeneratedData d = generate(s);
  std::map<std::string, std::size_t> parsed;
  for (const auto& r : parse(d)) ++parsed[r.label];
  for (const auto& [label, n] : d.label_counts) {
    if (n > 0) {
      EXPECT_EQ(parsed[label], n) << label;
    }
  }
  EXPECT_EQ(d.label_counts.size(), kGeneratedClasses.size());
  for (const auto& c : kGeneratedClasses) EXPECT_GT(d.label_counts.at(c), 0u) << c;
  EXPECT_GT(d.flows, 15000u);
  EXPECT_LT(d.flows, 25000u);
}

TEST(Generate, ArchetypeSignatures) {
  ScenarioSpec s = small(5);
  s.attacks.push_back({AttackType::kPortScan, 10.0, 30.0, 4.0, std::string("10.0.0.3")});
  s.attacks.push_back({AttackType::kBackdoorBeacon, 0.0, 100.0, 0.2, std::string("10.0.0.7")});
  const GeneratedData d = generate(s);
  const auto records = parse(d);
  std::vector<double> beacon_times;
  std::set<std::string> scanned;
  for (const auto& r : records) {
    if (r.label == "port_scan") {
      EXPECT_EQ(r.src, "192.0.2.66");
      EXPECT_EQ(r.dst.substr(0, r.dst.find(':')), "10.0.0.3");
      scanned.insert(r.dst);
    }
    if (r.label == "backdoor_beacon") {
      EXPECT_EQ(r.src.substr(0, r.src.find(':')), "10.0.0.7");
      beacon_times.push_back(r.timestamp);
    }
  }
  EXPECT_EQ(scanned.size(), d.label_counts.at("port_scan"));  // every probe hits a new port
  ASSERT_GE(beacon_times.size(), 3u);
  for (std::size_t i = 1; i < beacon_times.size(); ++i) {
    EXPECT_NEAR(beacon_times[i] - beacon_times[i - 1], 1.0, 1e-5);  // 1 / (0.2 * 5)
  }
}

TEST(Generate, MissingCellsAppearAtTheRequestedRate) {
  ScenarioSpec s = small(6);
  s.missing_rate = 0.1;
  const GeneratedData d = generate(s);
  std::size_t blank = 0, cells = 0;
  for (const auto& r : parse(d)) {
    for (const auto& v : r.continuous) {
      ++cells;
      blank += !v.has_value();
    }
  }
  const double rate = static_cast<double>(blank) / static_cast<double>(cells);
  EXPECT_NEAR(rate, 0.1, 0.02);
}

TEST(Generate, OverlappingAttacksMergeWithWarning) {
  ScenarioSpec s = small();
  s.attacks.push_back({AttackType::kDdos, 10.0, 20.0, 2.0, std::string("10.0.0.1:80")});
  s.attacks.push_back({AttackType::kDdos, 20.0, 20.0, 5.0, std::string("10.0.0.1:80")});
  const GeneratedData d = generate(s);
  EXPECT_EQ(d.warnings.size(), 1u);
}

TEST(ScenarioSpec, TextRoundTripAndValidation) {
  ScenarioSpec s = default_scenario(9);
  s.attacks[0].target = "10.0.0.1:443";
  const ScenarioSpec back = ScenarioSpec::from_text(s.to_text());
  EXPECT_EQ(back.to_text(), s.to_text());
  EXPECT_EQ(generate(back).csv, generate(s).csv);

  ScenarioSpec bad = small();
  bad.attacks.push_back({AttackType::kDdos, 100.0, 50.0, 2.0, std::nullopt});
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = small();
  bad.entity_count = 3;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = small();
  bad.background_rate = 0.0;
  EXPECT_THROW(bad.validate(), ConfigError);
  EXPECT_THROW(ScenarioSpec::from_text("attack = worm start=1 duration=2 intensity=3\n"), ConfigError);
  EXPECT_THROW(parse_attack_type("worm"), ConfigError);
}

TEST(WriteGenerated, WritesCsvAndSchema) {
  const auto dir = testing::temp_path("hids_datagen_test");
  std::filesystem::remove_all(dir);
  const GeneratedData d = generate(small());
  write_generated(dir, d);
  const SchemaSpec schema = SchemaSpec::load(dir / "schema.txt");
  EXPECT_EQ(schema.names(), generated_schema().names());
  EXPECT_EQ(parse_flow_csv(dir / "flows.csv", schema).size(), d.flows);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace hids
