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
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hids::csv {

using Row = std::vector<std::string>;

/// RFC-4180 parsing: comma separated, double-quoted fields with "" escapes,
/// CRLF or LF line ends, embedded newlines inside quotes. A leading UTF-8 BOM
/// is skipped. Blank lines are ignored.
std::vector<Row> parse(std::string_view text);

std::string read_text(const std::filesystem::path& path);

std::string escape(std::string_view field);
void write_row(std::ostream& out, std::span<const std::string> fields);

}  // namespace hids::csv
