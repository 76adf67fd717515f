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

// Binary model checkpoints.
//
// Layout (little-endian):
//   8 bytes   magic "HIDSCKPT"
//   u32       format version
//   u64 + n   model config text (ModelConfig::to_text)
//   u32       tensor count, then per tensor:
//               u64 + n name, u64 rows, u64 cols, rows*cols f64 (row-major)
//   u8        1 when optimizer state follows, else 0
//               u64 step, then m and v for every parameter (f64, row-major)
// Tensors are the parameters in canonical order followed by the batchnorm
// running statistics (gcn.<l>.running_mean, gcn.<l>.running_var).

#include <filesystem>
#include <optional>

#include "hids/model.hpp"
#include "hids/trainer.hpp"

namespace hids {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  HybridModel model;
  std::optional<AdamState> optimizer;
};

void save_checkpoint(const std::filesystem::path& path, const HybridModel& model,
                     const AdamState* optimizer = nullptr);

/// Throws FormatError on a wrong magic tag, an unsupported version, a
/// truncated file or a tensor that disagrees with the stored config.
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// As above, and throws ConfigError listing both values of every key on which
/// the stored config differs from `expected`.
Checkpoint load_checkpoint(const std::filesystem::path& path, const ModelConfig& expected);

}  // namespace hids
