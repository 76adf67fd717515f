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

// Run configuration shared by the command-line tools.
//
// File grammar: one `key = value` per line, `#` starts a comment, blank lines
// are ignored. Later assignments win, so command-line overrides are applied
// after the file.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "hids/model.hpp"
#include "hids/pipeline.hpp"
#include "hids/trainer.hpp"

namespace hids {

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  PrepareOptions prepare;
  std::size_t stride = 5;
  std::uint64_t seed = 1;

  std::string data;        // flow CSV
  std::string schema;      // schema file
  std::string prepared;    // prepared-data directory
  std::string checkpoint;  // model checkpoint
  std::string report;      // metrics report
  std::string traces;      // attention trace file

  struct Key {
    std::string name;
    std::string help;
  };
  /// Every accepted key, in the order `to_text` writes them.
  static const std::vector<Key>& keys();

  /// Throws ConfigError for an unknown key or a malformed value. `seed` sets
  /// the preprocessing, model and training seeds together; `window` is the
  /// model sequence length.
  void set(std::string_view key, std::string_view value);
  std::string get(std::string_view key) const;

  /// Applies `key = value` lines. Errors name the line number.
  void apply_text(std::string_view text);
  void apply_file(const std::filesystem::path& path);

  /// The effective configuration, one line per key.
  std::string to_text() const;

  /// Throws ConfigError when any part is inconsistent.
  void validate() const;

  WindowOptions window_options() const;
};

}  // namespace hids
