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

// Mini-batch training with Adam and early stopping on validation macro-F1.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hids/autograd.hpp"
#include "hids/model.hpp"

namespace hids {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::uint64_t step = 0;
  std::vector<ag::Matrix> m;
  std::vector<ag::Matrix> v;
};

/// One bias-corrected Adam update of every tensor from its `grad`. Moments
/// are created on the first call; a tensor without a gradient is treated as
/// having a zero gradient. Throws ShapeError when a gradient or a moment does
/// not match its tensor.
void adam_step(std::span<ag::Tensor* const> params, AdamState& state, const AdamConfig& config);

/// Scales all gradients so their joint L2 norm is at most `max_norm`;
/// returns the norm before scaling.
double clip_gradients(std::span<ag::Tensor* const> params, double max_norm);

struct TrainConfig {
  std::size_t batch_size = 256;
  double lr = 1e-3;
  std::size_t max_epochs = 200;
  std::size_t patience = 15;
  double val_fraction = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 1;
  double clip_norm = 0.0;  // 0 disables clipping
  double min_improvement = 1e-6;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;
  double val_f1 = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_val_f1 = 0.0;
  std::string stop_reason;  // early | max_epochs
  double wall_seconds = 0.0;
  std::size_t train_windows = 0;
  std::size_t val_windows = 0;
  std::vector<std::string> warnings;

  /// `epoch,loss,val_f1` header and one line per epoch.
  std::string to_log() const;
};

/// Probabilities (N x classes) in infer mode, evaluated in batches.
ag::Matrix predict_probabilities(HybridModel& model, std::span<const WindowInput> windows,
                                 std::size_t batch_size = 256);

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Trains `model` on `windows`, holding out a stratified `val_fraction` for
/// early stopping, and leaves it at the best validation epoch.
///
/// Throws DataError for an empty training set, a single-class training set
/// or a label outside the model's classes.
TrainReport fit(HybridModel& model, std::span<const WindowInput> windows,
                std::span<const int> labels, const TrainConfig& config,
                const EpochCallback& on_epoch = {});

}  // namespace hids
