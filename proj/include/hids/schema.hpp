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

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hids {

enum class ColumnKind {
  kContinuous,
  kCategorical,
  kLabel,
  kTimestamp,
  kSrcEntity,
  kDstEntity,
  kIgnore,
};

std::string_view to_string(ColumnKind kind);
std::optional<ColumnKind> parse_column_kind(std::string_view text);

struct ColumnSpec {
  std::string name;
  ColumnKind kind;
};

/// Declared layout of a flow-record CSV.
///
/// Text form: one column per line, `name kind`, whitespace separated, `#`
/// starts a comment. The label line may carry a third token with the class
/// set, comma separated (`attack_cat label Normal,ddos,port_scan`); without it
/// the classes are taken from the data.
struct SchemaSpec {
  std::vector<ColumnSpec> columns;
  std::vector<std::string> classes;

  static SchemaSpec parse(std::string_view text);
  static SchemaSpec load(const std::filesystem::path& path);
  std::string to_text() const;

  /// Throws DataError unless there is exactly one label and one timestamp
  /// column, at least one src and one dst entity column, and names are unique.
  void validate() const;

  std::optional<std::size_t> find(std::string_view name) const;
  std::size_t label_column() const;
  std::size_t timestamp_column() const;
  std::vector<std::size_t> columns_of(ColumnKind kind) const;
  std::vector<std::string> names() const;
};

/// One parsed network event.
struct FlowRecord {
  double timestamp = 0.0;
  std::string src;  // src_entity cells joined with ':'
  std::string dst;  // dst_entity cells joined with ':'
  std::string label;
  // Schema order of continuous columns; nullopt marks a missing or
  // unparseable cell.
  std::vector<std::optional<double>> continuous;
  // Schema order of categorical columns; empty string marks a missing cell.
  std::vector<std::string> categorical;
  // Every raw cell in schema order; duplicates are judged on these.
  std::vector<std::string> cells;
};

std::optional<double> parse_number(std::string_view cell);

/// Builds one record from a row of raw cells already in schema order.
FlowRecord make_record(const SchemaSpec& schema, std::vector<std::string> cells,
                       std::size_t row_number);

/// Parses a CSV whose header lists exactly the schema's column names in
/// order. Throws DataError on an empty file, a header mismatch (naming the
/// offending columns), a bad row width, an unparseable timestamp, or a label
/// outside the declared class set.
std::vector<FlowRecord> parse_flow_csv(const std::filesystem::path& path,
                                       const SchemaSpec& schema);
std::vector<FlowRecord> parse_flow_csv_text(std::string_view text,
                                            const SchemaSpec& schema);

/// Declared classes, or the observed labels sorted with "Normal" first.
std::vector<std::string> class_table(const SchemaSpec& schema,
                                     std::span<const FlowRecord> records);

}  // namespace hids
