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

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "hids/config.hpp"
#include "hids/datagen.hpp"
#include "hids/error.hpp"
#include "hids/pipeline.hpp"
#include "support.hpp"

namespace hids {
namespace {

GeneratedData small_corpus() {
  ScenarioSpec s;
  s.duration = 200.0;
  s.background_rate = 6.0;
  s.entity_count = 16;
  s.seed = 5;
  s.attacks = {{AttackType::kDdos, 20.0, 20.0, 3.0, std::nullopt},
               {AttackType::kPortScan, 60.0, 30.0, 2.0, std::nullopt},
               {AttackType::kExfiltration, 110.0, 30.0, 1.0, std::nullopt},
               {AttackType::kBackdoorBeacon, 150.0, 40.0, 1.0, std::nullopt}};
  s.missing_rate = 0.01;
  return generate(s);
}

PrepareOptions options() {
  PrepareOptions o;
  o.preprocess.top_k = 12;
  o.smote.target_ratio = 0.3;
  o.seed = 2;
  return o;
}

class PipelineTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    corpus_ = new GeneratedData(small_corpus());
    data_ = new PreparedData(prepare(parse_flow_csv_text(corpus_->csv, corpus_->schema), corpus_->schema, options()));
  }
  static void TearDownTestSuite() {
    delete data_;
    delete corpus_;
  }
  static GeneratedData* corpus_;
  static PreparedData* data_;
};

GeneratedData* PipelineTest::corpus_ = nullptr;
PreparedData* PipelineTest::data_ = nullptr;

TEST_F(PipelineTest, PartitionsAreDisjointAndComplete) {
  const PreparedData& d = *data_;
  EXPECT_EQ(d.records, corpus_->flows);
  EXPECT_EQ(d.class_names, kGeneratedClasses);
  std::set<std::size_t> train, test;
  std::size_t real_train = 0;
  for (std::size_t i = 0; i < d.train.rows(); ++i) {
    if (!d.train.synthetic[i]) {
      train.insert(d.train.source_rows[i]);
      ++real_train;
    }
  }
  for (std::size_t r : d.test.source_rows) test.insert(r);
  EXPECT_EQ(train.size(), real_train);
  for (std::size_t r : test) EXPECT_EQ(train.count(r), 0u);
  EXPECT_EQ(train.size() + test.size(), d.records - d.duplicates_removed);
  EXPECT_EQ(train.size(), static_cast<std::size_t>(0.8 * static_cast<double>(train.size() + test.size())));
  EXPECT_EQ(d.test.feature_names, d.train.feature_names);
  EXPECT_LE(d.train.feature_names.size(), 12u);
  for (auto s : d.test.synthetic) EXPECT_EQ(s, 0);
}

TEST_F(PipelineTest, SyntheticRowsReuseTheirSourceEvent) {
  const PreparedData& d = *data_;
  std::size_t synthetic = 0;
  for (std::size_t i = 0; i < d.train.rows(); ++i) {
    if (!d.train.synthetic[i]) continue;
    ++synthetic;
    const std::size_t src = d.train.source_rows[i];
    bool found = false;
    for (std::size_t j = 0; j < d.train.rows() && !found; ++j) {
      if (!d.train.synthetic[j] && d.train.source_rows[j] == src) {
        found = d.train.events[j].timestamp == d.train.events[i].timestamp &&
                d.train.events[j].src == d.train.events[i].src && d.train.labels[j] == d.train.labels[i];
      }
    }
    EXPECT_TRUE(found) << "synthetic row " << i;
  }
  EXPECT_GT(synthetic, 0u);
}

TEST_F(PipelineTest, ProvenanceRecordsEveryStep) {
  std::set<std::string> ops;
  for (const auto& step : data_->provenance) ops.insert(step["op"].get<std::string>());
  for (const char* op : {"deduplicate", "stratified_split", "impute", "one_hot", "minmax", "smote"}) {
    EXPECT_TRUE(ops.count(op)) << op;
  }
}

TEST_F(PipelineTest, SaveLoadIsExact) {
  const auto dir = testing::temp_path("hids_pipeline_test");
  std::filesystem::remove_all(dir);
  save_prepared(dir, *data_);
  const PreparedData back = load_prepared(dir);
  EXPECT_EQ(back.class_names, data_->class_names);
  EXPECT_EQ(back.train.features, data_->train.features);
  EXPECT_EQ(back.test.features, data_->test.features);
  EXPECT_EQ(back.train.labels, data_->train.labels);
  EXPECT_EQ(back.train.synthetic, data_->train.synthetic);
  ASSERT_EQ(back.test.events.size(), data_->test.events.size());
  for (std::size_t i = 0; i < back.test.events.size(); ++i) {
    EXPECT_EQ(back.test.events[i].timestamp, data_->test.events[i].timestamp);
    EXPECT_EQ(back.test.events[i].dst, data_->test.events[i].dst);
    EXPECT_EQ(back.test.events[i].src_bytes, data_->test.events[i].src_bytes);
  }
  EXPECT_EQ(back.transform.to_json(), data_->transform.to_json());
  std::ofstream(dir / "manifest.json") << "{\"format\": \"other/9\"}";
  EXPECT_THROW(load_prepared(dir), FormatError);
  std::filesystem::remove(dir / "manifest.json");
  EXPECT_THROW(load_prepared(dir), DataError);
  std::filesystem::remove_all(dir);
}

TEST_F(PipelineTest, WindowsFollowTimeOrderAndLastEventLabel) {
  WindowOptions w;
  w.length = 20;
  w.stride = 7;
  const WindowData wd = build_windows(data_->test, data_->class_names, w);
  const std::size_t n = data_->test.rows();
  ASSERT_EQ(wd.size(), (n - 20) / 7 + 1);
  for (std::size_t k = 0; k < wd.size(); ++k) {
    const auto& rows = wd.set.windows[k];
    for (std::size_t t = 1; t < rows.size(); ++t) {
      EXPECT_LE(data_->test.events[rows[t - 1]].timestamp, data_->test.events[rows[t]].timestamp);
    }
    EXPECT_EQ(wd.labels[k], data_->test.labels[rows.back()]);
    const WindowInput& in = wd.inputs[k];
    EXPECT_EQ(in.events.rows(), 20);
    EXPECT_EQ(in.events.cols(), static_cast<ag::Index>(data_->test.feature_names.size()));
    const TrafficGraph g = window_graph(data_->test, wd.set, k);
    EXPECT_EQ(in.graph->features.rows(), static_cast<ag::Index>(g.size()));
    for (std::size_t t = 0; t < 20; ++t) {
      EXPECT_EQ(g.nodes[static_cast<std::size_t>(in.src[t])], data_->test.events[rows[t]].src);
      EXPECT_EQ(g.nodes[static_cast<std::size_t>(in.dst[t])], data_->test.events[rows[t]].dst);
    }
  }
  EXPECT_THROW(window_graph(data_->test, wd.set, wd.size()), DataError);
}

TEST(Prepare, TinyClassIsRejected) {
  const SchemaSpec schema = generated_schema();
  GeneratedData d = small_corpus();
  auto records = parse_flow_csv_text(d.csv, d.schema);
  // Keep a single exfiltration record.
  std::vector<FlowRecord> kept;
  bool seen = false;
  for (auto& r : records) {
    if (r.label == "exfiltration") {
      if (seen) continue;
      seen = true;
    }
    kept.push_back(std::move(r));
  }
  EXPECT_THROW(prepare(kept, schema, options()), DataError);
}

// --- RunConfig -------------------------------------------------------------------

TEST(RunConfig, SetGetAndSeedPropagation) {
  RunConfig c;
  c.set("seed", "42");
  EXPECT_EQ(c.model.seed, 42u);
  EXPECT_EQ(c.train.seed, 42u);
  EXPECT_EQ(c.prepare.seed, 42u);
  EXPECT_EQ(c.prepare.smote.seed, 42u);
  c.set("gcn_dims", "16, 8");
  EXPECT_EQ(c.model.gcn_dims, (std::vector<std::size_t>{16, 8}));
  EXPECT_EQ(c.get("gcn_dims"), "16,8");
  c.set("window", "30");
  EXPECT_EQ(c.model.seq_len, 30u);
  c.set("smote", "off");
  EXPECT_FALSE(c.prepare.use_smote);
  c.set("variant", "gnn_only");
  EXPECT_EQ(c.model.variant, Variant::kGnnOnly);
  c.set("lr", "0.0005");
  EXPECT_EQ(c.train.lr, 0.0005);
  EXPECT_THROW(c.set("learning_rate", "1"), ConfigError);
  EXPECT_THROW(c.set("batch_size", "-4"), ConfigError);
  EXPECT_THROW(c.set("lr", "fast"), ConfigError);
  EXPECT_THROW(c.get("nope"), ConfigError);
}

TEST(RunConfig, DefaultsMatchTheModelAndTrainerDefaults) {
  const RunConfig c;
  EXPECT_EQ(c.get("gcn_dims"), "128,64,32");
  EXPECT_EQ(c.get("heads"), "4");
  EXPECT_EQ(c.get("head_dim"), "32");
  EXPECT_EQ(c.get("lstm_hidden"), "64");
  EXPECT_EQ(c.get("batch_size"), "256");
  EXPECT_EQ(c.get("patience"), "15");
  EXPECT_EQ(c.get("max_epochs"), "200");
  EXPECT_EQ(c.get("window"), "50");
  EXPECT_EQ(c.get("top_k"), "35");
  EXPECT_EQ(c.get("collinearity_threshold"), "0.84999999999999998");
  EXPECT_NO_THROW(c.validate());
}

TEST(RunConfig, TextRoundTripAndLineErrors) {
  RunConfig c;
  c.apply_text("# comment\nseed = 9\n\nstride=3  # trailing\nvariant = no_lstm\n");
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.stride, 3u);
  RunConfig back;
  back.apply_text(c.to_text());
  EXPECT_EQ(back.to_text(), c.to_text());
  const std::string text = c.to_text();
  EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')), RunConfig::keys().size());
  try {
    RunConfig bad;
    bad.apply_text("seed = 1\nbogus = 2\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  RunConfig no_eq;
  EXPECT_THROW(no_eq.apply_text("seed 1\n"), ConfigError);
  EXPECT_THROW(no_eq.apply_file("/nonexistent/run.cfg"), ConfigError);
}

TEST(RunConfig, ValidationAndWindowOptions) {
  RunConfig c;
  c.set("train_fraction", "1");
  EXPECT_THROW(c.validate(), ConfigError);
  c = RunConfig{};
  c.set("stride", "0");
  EXPECT_THROW(c.validate(), ConfigError);
  c = RunConfig{};
  c.set("heads", "3");
  EXPECT_THROW(c.validate(), ConfigError);
  c = RunConfig{};
  c.set("window", "12");
  c.set("stride", "4");
  const WindowOptions w = c.window_options();
  EXPECT_EQ(w.length, 12u);
  EXPECT_EQ(w.stride, 4u);
}

}  // namespace
}  // namespace hids
