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

// Test-set evaluation, ablation runs and attention-trace export.

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "hids/metrics.hpp"
#include "hids/model.hpp"
#include "hids/trainer.hpp"

namespace hids {

struct Evaluation {
  MetricsReport report;
  ag::Matrix probabilities;
  std::vector<int> predictions;
};

/// Infer-mode forward over every window, argmax prediction and all metrics.
/// Throws ShapeError when the model's class count or input widths disagree
/// with the data.
Evaluation evaluate(HybridModel& model, std::span<const WindowInput> windows,
                    std::span<const int> labels, const std::vector<std::string>& class_names,
                    std::size_t batch_size = 256);

struct AblationRow {
  Variant variant = Variant::kFull;
  TrainReport training;
  MetricsReport report;
};

using AblationProgress = std::function<void(Variant, const EpochRecord&)>;

/// Trains and evaluates one model per variant from the same config and seed.
/// Rows follow the order of `variants`.
std::vector<AblationRow> ablate(std::span<const WindowInput> train_windows,
                                std::span<const int> train_labels,
                                std::span<const WindowInput> test_windows,
                                std::span<const int> test_labels,
                                const std::vector<std::string>& class_names,
                                const ModelConfig& model_config, const TrainConfig& train_config,
                                std::span<const Variant> variants,
                                const AblationProgress& progress = {});

/// Text table of the macro metrics of each variant.
std::string ablation_table(std::span<const AblationRow> rows);

struct AttentionTrace {
  std::size_t window = 0;
  int true_class = 0;
  int predicted_class = 0;
  std::vector<ag::Matrix> heads;  // T x T each, rows sum to 1
  std::vector<double> salience;   // mean over heads of column sums
};

/// Runs the model in infer mode on `windows` and collects their attention
/// weights. `ids` names each window in the output (defaults to its position).
/// Throws ConfigError for a variant without attention.
std::vector<AttentionTrace> attention_traces(HybridModel& model,
                                             std::span<const WindowInput> windows,
                                             std::span<const int> labels,
                                             std::span<const std::size_t> ids = {},
                                             std::size_t batch_size = 256);

std::vector<double> salience(std::span<const ag::Matrix> heads);

/// Trace file:
///   # comment lines
///   WINDOW <id> T <T> HEADS <h> TRUE <class> PRED <class>
///   HEAD <i>            followed by T rows of T weights
///   SALIENCE            followed by one row of T values
/// Throws NumericError when a weight row does not sum to 1 within 1e-9.
void write_attention(std::ostream& out, std::span<const AttentionTrace> traces,
                     const std::vector<std::string>& class_names);
void export_attention(const std::filesystem::path& path, std::span<const AttentionTrace> traces,
                      const std::vector<std::string>& class_names);
std::vector<AttentionTrace> read_attention(std::istream& in,
                                           const std::vector<std::string>& class_names);

}  // namespace hids
