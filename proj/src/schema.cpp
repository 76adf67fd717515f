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

#include "hids/schema.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include "hids/csv.hpp"
#include "hids/error.hpp"

namespace hids {
namespace {

constexpr std::pair<ColumnKind, std::string_view> kKindNames[] = {
    {ColumnKind::kContinuous, "continuous"}, {ColumnKind::kCategorical, "categorical"},
    {ColumnKind::kLabel, "label"},           {ColumnKind::kTimestamp, "timestamp"},
    {ColumnKind::kSrcEntity, "src_entity"},  {ColumnKind::kDstEntity, "dst_entity"},
    {ColumnKind::kIgnore, "ignore"},
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.emplace_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

// An entity id is empty when any of its parts is empty.
std::string join_entity(const std::vector<std::string_view>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (parts[i].empty()) return {};
    if (i > 0) out += ':';
    out += parts[i];
  }
  return out;
}

}  // namespace

std::string_view to_string(ColumnKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "?";
}

std::optional<ColumnKind> parse_column_kind(std::string_view text) {
  for (const auto& [k, name] : kKindNames) {
    if (name == text) return k;
  }
  return std::nullopt;
}

SchemaSpec SchemaSpec::parse(std::string_view text) {
  SchemaSpec schema;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view body = line;
    if (const auto hash = body.find('#'); hash != std::string_view::npos) {
      body = body.substr(0, hash);
    }
    std::istringstream fields{std::string(trim(body))};
    std::string name, kind_text, extra, rest;
    if (!(fields >> name)) continue;
    if (!(fields >> kind_text)) {
      throw DataError("schema line " + std::to_string(line_no) + ": missing kind for '" +
                      name + "'");
    }
    const auto kind = parse_column_kind(kind_text);
    if (!kind) {
      throw DataError("schema line " + std::to_string(line_no) + ": unknown kind '" +
                      kind_text + "'");
    }
    if (fields >> extra) {
      if (*kind != ColumnKind::kLabel || (fields >> rest)) {
        throw DataError("schema line " + std::to_string(line_no) +
                        ": unexpected trailing tokens");
      }
      schema.classes = split(extra, ',');
    }
    schema.columns.push_back({name, *kind});
  }
  schema.validate();
  return schema;
}

SchemaSpec SchemaSpec::load(const std::filesystem::path& path) {
  return parse(csv::read_text(path));
}

std::string SchemaSpec::to_text() const {
  std::ostringstream out;
  for (const auto& c : columns) {
    out << c.name << ' ' << to_string(c.kind);
    if (c.kind == ColumnKind::kLabel && !classes.empty()) {
      out << ' ';
      for (std::size_t i = 0; i < classes.size(); ++i) out << (i ? "," : "") << classes[i];
    }
    out << '\n';
  }
  return out.str();
}

void SchemaSpec::validate() const {
  std::set<std::string> seen;
  for (const auto& c : columns) {
    if (!seen.insert(c.name).second) throw DataError("schema: duplicate column '" + c.name + "'");
  }
  auto count = [&](ColumnKind k) {
    return std::count_if(columns.begin(), columns.end(),
                         [k](const ColumnSpec& c) { return c.kind == k; });
  };
  if (count(ColumnKind::kLabel) != 1) throw DataError("schema: need exactly one label column");
  if (count(ColumnKind::kTimestamp) != 1) {
    throw DataError("schema: need exactly one timestamp column");
  }
  if (count(ColumnKind::kSrcEntity) < 1 || count(ColumnKind::kDstEntity) < 1) {
    throw DataError("schema: need at least one src_entity and one dst_entity column");
  }
  std::set<std::string> cls(classes.begin(), classes.end());
  if (cls.size() != classes.size()) throw DataError("schema: duplicate class names");
}

std::optional<std::size_t> SchemaSpec::find(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t SchemaSpec::label_column() const { return columns_of(ColumnKind::kLabel).at(0); }

std::size_t SchemaSpec::timestamp_column() const {
  return columns_of(ColumnKind::kTimestamp).at(0);
}

std::vector<std::size_t> SchemaSpec::columns_of(ColumnKind kind) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].kind == kind) out.push_back(i);
  }
  return out;
}

std::vector<std::string> SchemaSpec::names() const {
  std::vector<std::string> out;
  for (const auto& c : columns) out.push_back(c.name);
  return out;
}

std::optional<double> parse_number(std::string_view cell) {
  cell = trim(cell);
  if (cell.empty()) return std::nullopt;
  if (cell.front() == '+') cell.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

FlowRecord make_record(const SchemaSpec& schema, std::vector<std::string> cells,
                       std::size_t row_number) {
  if (cells.size() != schema.columns.size()) {
    throw DataError("row " + std::to_string(row_number) + ": " +
                    std::to_string(cells.size()) + " cells, schema has " +
                    std::to_string(schema.columns.size()) + " columns");
  }
  FlowRecord r;
  std::vector<std::string_view> src_parts, dst_parts;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const std::string& cell = cells[i];
    switch (schema.columns[i].kind) {
      case ColumnKind::kContinuous:
        r.continuous.push_back(parse_number(cell));
        break;
      case ColumnKind::kCategorical:
        r.categorical.emplace_back(trim(cell));
        break;
      case ColumnKind::kLabel:
        r.label = std::string(trim(cell));
        break;
      case ColumnKind::kTimestamp: {
        const auto ts = parse_number(cell);
        if (!ts) {
          throw DataError("row " + std::to_string(row_number) + ": unparseable timestamp '" +
                          cell + "'");
        }
        r.timestamp = *ts;
        break;
      }
      case ColumnKind::kSrcEntity:
        src_parts.push_back(trim(cell));
        break;
      case ColumnKind::kDstEntity:
        dst_parts.push_back(trim(cell));
        break;
      case ColumnKind::kIgnore:
        break;
    }
  }
  r.src = join_entity(src_parts);
  r.dst = join_entity(dst_parts);
  if (!schema.classes.empty() &&
      std::find(schema.classes.begin(), schema.classes.end(), r.label) == schema.classes.end()) {
    throw DataError("row " + std::to_string(row_number) + ": label '" + r.label +
                    "' is not in the declared class set");
  }
  r.cells = std::move(cells);
  return r;
}

std::vector<FlowRecord> parse_flow_csv_text(std::string_view text, const SchemaSpec& schema) {
  schema.validate();
  auto rows = csv::parse(text);
  if (rows.empty()) throw DataError("flow csv: empty file");

  const auto& header = rows.front();
  const auto expected = schema.names();
  if (header != expected) {
    std::ostringstream msg;
    msg << "flow csv: header does not match schema;";
    const std::size_t n = std::max(header.size(), expected.size());
    for (std::size_t i = 0; i < n; ++i) {
      const std::string got = i < header.size() ? header[i] : "<none>";
      const std::string want = i < expected.size() ? expected[i] : "<none>";
      if (got != want) msg << " column " << i << " is '" << got << "' (schema: '" << want << "');";
    }
    throw DataError(msg.str());
  }

  std::vector<FlowRecord> records;
  records.reserve(rows.size() - 1);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    records.push_back(make_record(schema, std::move(rows[i]), i));
  }
  return records;
}

std::vector<FlowRecord> parse_flow_csv(const std::filesystem::path& path,
                                       const SchemaSpec& schema) {
  return parse_flow_csv_text(csv::read_text(path), schema);
}

std::vector<std::string> class_table(const SchemaSpec& schema,
                                     std::span<const FlowRecord> records) {
  if (!schema.classes.empty()) return schema.classes;
  std::set<std::string> seen;
  for (const auto& r : records) seen.insert(r.label);
  std::vector<std::string> out;
  if (seen.erase("Normal")) out.push_back("Normal");
  out.insert(out.end(), seen.begin(), seen.end());
  return out;
}

}  // namespace hids
