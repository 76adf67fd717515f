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

#include "hids/pipeline.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "hids/csv.hpp"
#include "hids/error.hpp"

namespace hids {
namespace {

constexpr std::string_view kPreparedFormat = "hids-prepared/1";

const std::vector<std::string> kEventHeader = {
    "timestamp", "src",       "dst",        "duration",   "protocol", "service",  "dst_port",
    "src_packets", "dst_packets", "src_bytes", "dst_bytes", "state", "source_row", "synthetic",
    "label"};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double to_num(const std::string& cell, const std::filesystem::path& path, std::size_t line) {
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (cell.empty() || end != cell.c_str() + cell.size()) {
    throw FormatError(path.string() + ":" + std::to_string(line) + ": bad number '" + cell + "'");
  }
  return v;
}

PreparedPart make_part(const Dataset& data, const std::vector<FlowEvent>& events) {
  PreparedPart part;
  part.feature_names = data.feature_names();
  part.features = data.feature_matrix();
  part.labels = data.labels;
  part.source_rows = data.source_rows;
  part.synthetic = data.synthetic;
  part.events.reserve(data.rows());
  for (std::size_t r : data.source_rows) part.events.push_back(events.at(r));
  return part;
}

void write_part(const std::filesystem::path& path, const PreparedPart& part,
                const std::vector<std::string>& classes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  std::vector<std::string> header = kEventHeader;
  header.insert(header.end(), part.feature_names.begin(), part.feature_names.end());
  csv::write_row(out, header);
  std::vector<std::string> row;
  for (std::size_t r = 0; r < part.rows(); ++r) {
    const FlowEvent& e = part.events[r];
    row = {num(e.timestamp),   e.src,
           e.dst,              num(e.duration),
           e.protocol,         e.service,
           num(e.dst_port),    num(e.src_packets),
           num(e.dst_packets), num(e.src_bytes),
           num(e.dst_bytes),   e.state,
           std::to_string(part.source_rows[r]), std::to_string(part.synthetic[r]),
           classes.at(static_cast<std::size_t>(part.labels[r]))};
    for (ag::Index c = 0; c < part.features.cols(); ++c) {
      row.push_back(num(part.features(static_cast<ag::Index>(r), c)));
    }
    csv::write_row(out, row);
  }
  if (!out) throw DataError("write failed for " + path.string());
}

PreparedPart read_part(const std::filesystem::path& path, const std::vector<std::string>& classes) {
  const auto rows = csv::parse(csv::read_text(path));
  if (rows.empty()) throw FormatError(path.string() + ": empty file");
  const auto& header = rows.front();
  if (header.size() < kEventHeader.size() ||
      !std::equal(kEventHeader.begin(), kEventHeader.end(), header.begin())) {
    throw FormatError(path.string() + ": not a prepared partition (unexpected header)");
  }
  PreparedPart part;
  part.feature_names.assign(header.begin() + static_cast<std::ptrdiff_t>(kEventHeader.size()),
                            header.end());
  const std::size_t n = rows.size() - 1;
  const auto d = static_cast<ag::Index>(part.feature_names.size());
  part.features.resize(static_cast<ag::Index>(n), d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& row = rows[i + 1];
    const std::size_t line = i + 2;
    if (row.size() != header.size()) {
      throw FormatError(path.string() + ":" + std::to_string(line) + ": expected " +
                        std::to_string(header.size()) + " cells, found " +
                        std::to_string(row.size()));
    }
    FlowEvent e;
    e.timestamp = to_num(row[0], path, line);
    e.src = row[1];
    e.dst = row[2];
    e.duration = to_num(row[3], path, line);
    e.protocol = row[4];
    e.service = row[5];
    e.dst_port = to_num(row[6], path, line);
    e.src_packets = to_num(row[7], path, line);
    e.dst_packets = to_num(row[8], path, line);
    e.src_bytes = to_num(row[9], path, line);
    e.dst_bytes = to_num(row[10], path, line);
    e.state = row[11];
    part.events.push_back(std::move(e));
    part.source_rows.push_back(static_cast<std::size_t>(to_num(row[12], path, line)));
    part.synthetic.push_back(row[13] == "1" ? 1 : 0);
    const auto it = std::find(classes.begin(), classes.end(), row[14]);
    if (it == classes.end()) {
      throw FormatError(path.string() + ":" + std::to_string(line) + ": unknown class '" +
                        row[14] + "'");
    }
    part.labels.push_back(static_cast<int>(it - classes.begin()));
    for (ag::Index c = 0; c < d; ++c) {
      part.features(static_cast<ag::Index>(i), c) =
          to_num(row[kEventHeader.size() + static_cast<std::size_t>(c)], path, line);
    }
  }
  return part;
}

}  // namespace

PreparedData prepare(std::vector<FlowRecord> records, const SchemaSpec& schema,
                     const PrepareOptions& options) {
  schema.validate();
  if (records.empty()) throw DataError("prepare: no records");
  PreparedData out;
  out.records = records.size();
  DedupResult dedup = deduplicate(std::move(records));
  out.duplicates_removed = dedup.removed;
  out.class_names = class_table(schema, dedup.records);

  const EventExtractor extract(schema, options.graph_columns);
  std::vector<FlowEvent> events;
  events.reserve(dedup.records.size());
  for (const auto& r : dedup.records) events.push_back(extract(r));

  Dataset all = make_dataset(dedup.records, schema, out.class_names);
  all.log("deduplicate", {{"removed", dedup.removed}, {"kept", dedup.records.size()}});
  const SplitResult split = stratified_split(all.labels, options.train_fraction, options.seed);
  Dataset train = all.subset(split.train);
  Dataset test = all.subset(split.test);
  train.log("stratified_split", {{"train_fraction", options.train_fraction},
                                 {"seed", options.seed},
                                 {"train_rows", split.train.size()},
                                 {"test_rows", split.test.size()}});

  out.transform = fit_transform(train, options.preprocess);
  out.transform.apply(test);
  for (const auto& step : out.transform.steps) {
    if (const auto* s = std::get_if<ImputeStep>(&step)) {
      out.warnings.insert(out.warnings.end(), s->warnings.begin(), s->warnings.end());
    } else if (const auto* sel = std::get_if<SelectStep>(&step)) {
      out.warnings.insert(out.warnings.end(), sel->warnings.begin(), sel->warnings.end());
    }
  }

  if (options.use_smote) {
    SmoteOptions smote_options = options.smote;
    smote_options.seed = options.seed;
    SmoteResult balanced = smote(train, smote_options);
    out.warnings.insert(out.warnings.end(), balanced.warnings.begin(), balanced.warnings.end());
    train = std::move(balanced.data);
  }

  out.provenance = train.provenance;
  out.train = make_part(train, events);
  out.test = make_part(test, events);
  return out;
}

void save_prepared(const std::filesystem::path& dir, const PreparedData& data) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest = {
      {"format", kPreparedFormat},
      {"classes", data.class_names},
      {"records", data.records},
      {"duplicates_removed", data.duplicates_removed},
      {"train_rows", data.train.rows()},
      {"test_rows", data.test.rows()},
      {"features", data.train.feature_names},
      {"warnings", data.warnings},
      {"provenance", data.provenance},
  };
  std::ofstream out(dir / "manifest.json");
  if (!out) throw DataError("cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
  data.transform.save(dir / "transform.json");
  write_part(dir / "train.csv", data.train, data.class_names);
  write_part(dir / "test.csv", data.test, data.class_names);
}

PreparedData load_prepared(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw DataError("cannot open " + manifest_path.string());
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(manifest_path.string() + ": " + e.what());
  }
  if (manifest.value("format", "") != kPreparedFormat) {
    throw FormatError(manifest_path.string() + ": expected format " + std::string(kPreparedFormat));
  }
  PreparedData data;
  try {
    data.class_names = manifest.at("classes").get<std::vector<std::string>>();
    data.records = manifest.at("records").get<std::size_t>();
    data.duplicates_removed = manifest.at("duplicates_removed").get<std::size_t>();
    data.warnings = manifest.at("warnings").get<std::vector<std::string>>();
    data.provenance = manifest.at("provenance");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(manifest_path.string() + ": " + e.what());
  }
  data.transform = Transform::load(dir / "transform.json");
  data.train = read_part(dir / "train.csv", data.class_names);
  data.test = read_part(dir / "test.csv", data.class_names);
  if (data.train.feature_names != data.test.feature_names) {
    throw FormatError(dir.string() + ": train and test feature columns differ");
  }
  return data;
}

WindowData build_windows(const PreparedPart& part, const std::vector<std::string>& class_names,
                         const WindowOptions& options) {
  WindowData out;
  out.class_names = class_names;
  std::vector<double> times;
  times.reserve(part.rows());
  for (const auto& e : part.events) times.push_back(e.timestamp);
  const auto order = time_order(times);
  out.set = make_windows(order, part.labels, options.length, options.stride);
  out.labels = out.set.labels;
  out.inputs.reserve(out.set.size());
  for (std::size_t w = 0; w < out.set.size(); ++w) {
    const auto& rows = out.set.windows[w];
    WindowInput input;
    if (options.graphs) {
      const TrafficGraph g = window_graph(part, out.set, w, options.failure_states);
      input.graph = std::make_shared<const GraphInput>(make_graph_input(g));
      for (std::size_t r : rows) {
        input.src.push_back(static_cast<ag::Index>(g.node_index(part.events[r].src)));
        input.dst.push_back(static_cast<ag::Index>(g.node_index(part.events[r].dst)));
      }
    }
    if (options.events) {
      input.events.resize(static_cast<ag::Index>(rows.size()), part.features.cols());
      for (std::size_t t = 0; t < rows.size(); ++t) {
        input.events.row(static_cast<ag::Index>(t)) =
            part.features.row(static_cast<ag::Index>(rows[t]));
      }
    }
    out.inputs.push_back(std::move(input));
  }
  return out;
}

TrafficGraph window_graph(const PreparedPart& part, const WindowSet& set, std::size_t index,
                          const std::vector<std::string>& failure_states) {
  if (index >= set.size()) {
    throw DataError("window " + std::to_string(index) + " out of range (" +
                    std::to_string(set.size()) + " windows)");
  }
  std::vector<FlowEvent> events;
  for (std::size_t r : set.windows[index]) events.push_back(part.events.at(r));
  return build_graph(events, failure_states);
}

}  // namespace hids
