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

#pragma once

// End-to-end data preparation: parse, deduplicate, split, fit the tabular
// transform on the training rows, replay it on the test rows, oversample the
// training rows, and cut both partitions into windows with one traffic graph
// per window.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "hids/graph.hpp"
#include "hids/model.hpp"
#include "hids/preprocess.hpp"
#include "hids/schema.hpp"

namespace hids {

struct PrepareOptions {
  double train_fraction = 0.8;
  PreprocessOptions preprocess;
  bool use_smote = true;
  SmoteOptions smote;
  std::uint64_t seed = 1;
  GraphColumns graph_columns;
};

/// One partition after the tabular transform. Row r is the processed
/// feature row of the flow `events[r]`; synthetic rows carry the event of
/// the record they were interpolated from.
struct PreparedPart {
  std::vector<std::string> feature_names;
  ag::Matrix features;
  std::vector<int> labels;
  std::vector<FlowEvent> events;
  std::vector<std::size_t> source_rows;  // index into the deduplicated records
  std::vector<std::uint8_t> synthetic;

  std::size_t rows() const { return labels.size(); }
};

struct PreparedData {
  std::vector<std::string> class_names;
  Transform transform;
  PreparedPart train;
  PreparedPart test;
  std::size_t records = 0;
  std::size_t duplicates_removed = 0;
  nlohmann::json provenance = nlohmann::json::array();
  std::vector<std::string> warnings;
};

PreparedData prepare(std::vector<FlowRecord> records, const SchemaSpec& schema,
                     const PrepareOptions& options = {});

/// Writes manifest.json, transform.json, train.csv and test.csv into `dir`.
/// Numbers are written with 17 significant digits so a reload is exact.
void save_prepared(const std::filesystem::path& dir, const PreparedData& data);
PreparedData load_prepared(const std::filesystem::path& dir);

struct WindowOptions {
  std::size_t length = 50;
  std::size_t stride = 5;
  bool graphs = true;  // build a traffic graph per window
  bool events = true;  // attach the tabular feature rows
  std::vector<std::string> failure_states = default_failure_states();
};

struct WindowData {
  WindowSet set;  // row indices into the partition
  std::vector<WindowInput> inputs;
  std::vector<int> labels;
  std::vector<std::string> class_names;

  std::size_t size() const { return inputs.size(); }
};

/// Orders the partition by timestamp and windows it.
WindowData build_windows(const PreparedPart& part, const std::vector<std::string>& class_names,
                         const WindowOptions& options = {});

/// Traffic graph of window `index` of `set`.
TrafficGraph window_graph(const PreparedPart& part, const WindowSet& set, std::size_t index,
                          const std::vector<std::string>& failure_states = default_failure_states());

}  // namespace hids
