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

// Hybrid window classifier: graph convolution over each window's traffic
// graph, a bidirectional LSTM over the per-event node embeddings, multi-head
// self-attention over time, mean pooling and a softmax classifier.
//
// Batches are evaluated in one pass. The graphs of a batch are stacked into a
// block-diagonal system; LSTM tensors are time-major (row t*B + b) and the
// attention and pooling tensors window-major (row b*T + t).

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hids/autograd.hpp"
#include "hids/graph.hpp"
#include "hids/random.hpp"

namespace hids {

enum class Variant { kFull, kNoAttention, kNoGnn, kNoLstm, kGnnOnly, kLstmOnly };

std::string_view to_string(Variant v);
/// Throws ConfigError for an unknown name.
Variant parse_variant(std::string_view name);

struct ModelConfig {
  std::size_t node_features = kNodeFeatureCount;
  std::size_t event_features = 0;  // per-event tabular width; used by no_gnn and lstm_only
  std::vector<std::size_t> gcn_dims = {128, 64, 32};
  double gcn_dropout = 0.3;
  std::size_t lstm_layers = 2;
  std::size_t lstm_hidden = 64;  // per direction
  double lstm_dropout = 0.2;
  std::size_t heads = 4;
  std::size_t head_dim = 32;
  std::size_t classes = 2;
  std::size_t seq_len = 50;
  double l2 = 1e-5;
  std::uint64_t seed = 1;
  Variant variant = Variant::kFull;

  /// Throws ConfigError on an inconsistent configuration, including
  /// heads * head_dim != 2 * lstm_hidden.
  void validate() const;
  /// `key = value` lines in a fixed key order.
  std::string to_text() const;
  static ModelConfig from_text(std::string_view text);

  bool uses_graph() const;
  bool uses_events() const;
  bool uses_lstm() const;
  bool uses_attention() const;
};

/// Keys whose values differ, formatted `key: a vs b`.
std::vector<std::string> config_differences(const ModelConfig& a, const ModelConfig& b);

/// A graph ready for the network: log-compressed node features and the
/// normalized adjacency.
struct GraphInput {
  ag::Matrix features;
  ag::Matrix adjacency;
};

/// sign(x) * log(1 + |x|), applied to every node feature.
ag::Matrix compress_features(const ag::Matrix& raw);
GraphInput make_graph_input(const TrafficGraph& graph, bool symmetrize = true);

/// One classification instance: T events, each with the node indices of its
/// endpoints in `graph` and (optionally) a tabular feature row.
struct WindowInput {
  std::shared_ptr<const GraphInput> graph;
  std::vector<ag::Index> src;
  std::vector<ag::Index> dst;
  ag::Matrix events;  // T x event_features, may be empty
};

struct AttentionOutput {
  ag::Var output;                  // B*T x 2H, window-major
  std::vector<ag::Var> weights;    // per head, B*T x T
};

struct ForwardResult {
  ag::Var logits;         // B x classes
  ag::Var probabilities;  // B x classes
  // Per head, B*T x T; rows b*T .. b*T+T-1 belong to window b.
  std::vector<ag::Matrix> attention;
  ag::Index batch = 0;
};

/// Parameter values and batchnorm running statistics.
struct ModelState {
  std::vector<ag::Matrix> parameters;
  std::vector<ag::RunningStats> running;
};

class HybridModel {
 public:
  /// Validates `config` and initializes parameters from `config.seed`:
  /// Glorot-uniform weights, zero biases, forget-gate biases 1, batchnorm
  /// scale 1 and shift 0.
  explicit HybridModel(ModelConfig config);

  const ModelConfig& config() const { return config_; }

  /// Parameters in canonical order (the checkpoint order).
  std::vector<ag::Tensor*> parameters();
  std::vector<const ag::Tensor*> parameters() const;
  ag::Tensor& parameter(std::string_view name);
  const ag::Tensor& parameter(std::string_view name) const;
  std::size_t parameter_count() const;
  std::vector<ag::RunningStats>& running_stats() { return running_; }
  const std::vector<ag::RunningStats>& running_stats() const { return running_; }

  ModelState state() const;
  void restore(const ModelState& state);
  void zero_grad();

  /// Node embeddings of the stacked graphs, sum(|V_b|) x gcn_dims.back().
  ag::Var gcn_forward(ag::Tape& tape, std::span<const GraphInput* const> graphs, ag::Mode mode,
                      Rng& rng);
  /// Time-major input (T*B x width) to time-major states (T*B x 2H).
  ag::Var bilstm_forward(ag::Var sequence, ag::Index batch, ag::Mode mode, Rng& rng);
  /// Window-major states to attended window-major states.
  AttentionOutput multi_head_attention(ag::Var states, ag::Index batch);
  /// Mean over each window's T rows followed by the classifier; returns logits.
  ag::Var pool_and_classify(ag::Var states, ag::Index batch);

  ForwardResult forward(ag::Tape& tape, std::span<const WindowInput* const> batch, ag::Mode mode,
                        Rng& rng);

  /// Mean cross-entropy of the true classes plus l2 * sum of squared weight
  /// matrix entries (biases and batchnorm affines excluded).
  ag::Var loss(const ForwardResult& result, std::span<const int> labels);
  ag::Var l2_penalty(ag::Tape& tape);

 private:
  ag::Tensor& add_param(std::string name, ag::Index rows, ag::Index cols, bool decay);
  std::size_t index_of(std::string_view name) const;
  ag::Var p(ag::Tape& tape, std::string_view name);
  ag::Var step_sequence(ag::Tape& tape, std::span<const WindowInput* const> batch, ag::Mode mode,
                        Rng& rng);

  ModelConfig config_;
  std::vector<ag::Tensor> params_;
  std::vector<ag::RunningStats> running_;
};

/// Permutation taking time-major rows (t*B + b) to window-major (b*T + t).
std::vector<ag::Index> time_to_window_major(ag::Index steps, ag::Index batch);

}  // namespace hids
