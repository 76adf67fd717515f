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

#include "hids/model.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "hids/error.hpp"

namespace hids {
namespace {

using ag::Index;
using ag::Matrix;
using ag::Var;

constexpr std::pair<Variant, std::string_view> kVariantNames[] = {
    {Variant::kFull, "full"},         {Variant::kNoAttention, "no_attention"},
    {Variant::kNoGnn, "no_gnn"},      {Variant::kNoLstm, "no_lstm"},
    {Variant::kGnnOnly, "gnn_only"},  {Variant::kLstmOnly, "lstm_only"},
};

constexpr const char* kGates[] = {"i", "f", "o", "c"};

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join_dims(const std::vector<std::size_t>& dims) {
  std::string out;
  for (std::size_t i = 0; i < dims.size(); ++i) out += (i ? "," : "") + std::to_string(dims[i]);
  return out;
}

std::map<std::string, std::string> parse_pairs(std::string_view text) {
  std::map<std::string, std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    if (trim(line).empty()) continue;
    if (eq == std::string::npos) throw ConfigError("model config: expected key = value, got '" + line + "'");
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

std::size_t to_size(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const unsigned long long n = std::stoull(v, &pos);
    if (pos != v.size() || v.front() == '-') throw std::invalid_argument(v);
    return static_cast<std::size_t>(n);
  } catch (const std::exception&) {
    throw ConfigError("model config: " + key + " expects a non-negative integer, got '" + v + "'");
  }
}

double to_double(const std::string& key, const std::string& v) {
  const auto d = parse_number(v);
  if (!d) throw ConfigError("model config: " + key + " expects a number, got '" + v + "'");
  return *d;
}

void glorot(Matrix& w, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
  for (Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-a, a);
}

}  // namespace

std::string_view to_string(Variant v) {
  for (const auto& [k, name] : kVariantNames) {
    if (k == v) return name;
  }
  return "?";
}

Variant parse_variant(std::string_view name) {
  for (const auto& [k, n] : kVariantNames) {
    if (n == name) return k;
  }
  throw ConfigError("unknown model variant '" + std::string(name) +
                    "' (expected full, no_attention, no_gnn, no_lstm, gnn_only or lstm_only)");
}

// --- ModelConfig ------------------------------------------------------------

bool ModelConfig::uses_graph() const {
  return variant != Variant::kNoGnn && variant != Variant::kLstmOnly;
}
bool ModelConfig::uses_events() const { return !uses_graph(); }
bool ModelConfig::uses_lstm() const {
  return variant != Variant::kNoLstm && variant != Variant::kGnnOnly;
}
bool ModelConfig::uses_attention() const {
  return variant == Variant::kFull || variant == Variant::kNoGnn || variant == Variant::kNoLstm;
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("model config: " + msg); };
  if (gcn_dims.empty()) fail("gcn_dims must list at least one layer");
  for (std::size_t d : gcn_dims) {
    if (d == 0) fail("gcn_dims entries must be positive");
  }
  if (node_features == 0) fail("node_features must be positive");
  if (uses_events() && event_features == 0) {
    fail("variant " + std::string(to_string(variant)) + " needs event_features > 0");
  }
  if (!(gcn_dropout >= 0.0 && gcn_dropout < 1.0)) fail("gcn_dropout must lie in [0,1)");
  if (!(lstm_dropout >= 0.0 && lstm_dropout < 1.0)) fail("lstm_dropout must lie in [0,1)");
  if (lstm_layers == 0 || lstm_hidden == 0) fail("lstm_layers and lstm_hidden must be positive");
  if (heads == 0 || head_dim == 0) fail("heads and head_dim must be positive");
  if (heads * head_dim != 2 * lstm_hidden) {
    fail("heads * head_dim (" + std::to_string(heads * head_dim) +
         ") must equal 2 * lstm_hidden (" + std::to_string(2 * lstm_hidden) + ")");
  }
  if (classes < 2) fail("classes must be at least 2");
  if (seq_len == 0) fail("seq_len must be positive");
  if (!(l2 >= 0.0)) fail("l2 must be non-negative");
}

std::string ModelConfig::to_text() const {
  std::ostringstream out;
  out << "node_features = " << node_features << '\n'
      << "event_features = " << event_features << '\n'
      << "gcn_dims = " << join_dims(gcn_dims) << '\n'
      << "gcn_dropout = " << format_double(gcn_dropout) << '\n'
      << "lstm_layers = " << lstm_layers << '\n'
      << "lstm_hidden = " << lstm_hidden << '\n'
      << "lstm_dropout = " << format_double(lstm_dropout) << '\n'
      << "heads = " << heads << '\n'
      << "head_dim = " << head_dim << '\n'
      << "classes = " << classes << '\n'
      << "seq_len = " << seq_len << '\n'
      << "l2 = " << format_double(l2) << '\n'
      << "seed = " << seed << '\n'
      << "variant = " << to_string(variant) << '\n';
  return out.str();
}

ModelConfig ModelConfig::from_text(std::string_view text) {
  ModelConfig c;
  for (const auto& [key, v] : parse_pairs(text)) {
    if (key == "node_features") c.node_features = to_size(key, v);
    else if (key == "event_features") c.event_features = to_size(key, v);
    else if (key == "gcn_dims") {
      c.gcn_dims.clear();
      std::istringstream s(v);
      std::string part;
      while (std::getline(s, part, ',')) c.gcn_dims.push_back(to_size(key, part));
    } else if (key == "gcn_dropout") c.gcn_dropout = to_double(key, v);
    else if (key == "lstm_layers") c.lstm_layers = to_size(key, v);
    else if (key == "lstm_hidden") c.lstm_hidden = to_size(key, v);
    else if (key == "lstm_dropout") c.lstm_dropout = to_double(key, v);
    else if (key == "heads") c.heads = to_size(key, v);
    else if (key == "head_dim") c.head_dim = to_size(key, v);
    else if (key == "classes") c.classes = to_size(key, v);
    else if (key == "seq_len") c.seq_len = to_size(key, v);
    else if (key == "l2") c.l2 = to_double(key, v);
    else if (key == "seed") c.seed = to_size(key, v);
    else if (key == "variant") c.variant = parse_variant(v);
    else throw ConfigError("model config: unknown key '" + key + "'");
  }
  c.validate();
  return c;
}

std::vector<std::string> config_differences(const ModelConfig& a, const ModelConfig& b) {
  const auto pa = parse_pairs(a.to_text());
  const auto pb = parse_pairs(b.to_text());
  std::vector<std::string> out;
  for (const auto& [key, va] : pa) {
    const auto& vb = pb.at(key);
    if (va != vb) out.push_back(key + ": " + va + " vs " + vb);
  }
  return out;
}

// --- inputs -----------------------------------------------------------------

Matrix compress_features(const Matrix& raw) {
  return raw.unaryExpr([](double x) { return std::copysign(std::log1p(std::abs(x)), x); });
}

GraphInput make_graph_input(const TrafficGraph& graph, bool symmetrize) {
  return {compress_features(graph.features), normalize_adjacency(graph.adjacency, symmetrize)};
}

std::vector<Index> time_to_window_major(Index steps, Index batch) {
  std::vector<Index> perm(static_cast<std::size_t>(steps * batch));
  for (Index b = 0; b < batch; ++b) {
    for (Index t = 0; t < steps; ++t) perm[static_cast<std::size_t>(b * steps + t)] = t * batch + b;
  }
  return perm;
}

// --- HybridModel ------------------------------------------------------------

HybridModel::HybridModel(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  const auto& c = config_;
  const auto H = static_cast<Index>(c.lstm_hidden);
  const auto step_width = static_cast<Index>(c.gcn_dims.back());

  if (c.uses_graph()) {
    Index in = static_cast<Index>(c.node_features);
    for (std::size_t l = 0; l < c.gcn_dims.size(); ++l) {
      const auto out = static_cast<Index>(c.gcn_dims[l]);
      const std::string prefix = "gcn." + std::to_string(l) + ".";
      add_param(prefix + "weight", in, out, true);
      add_param(prefix + "gamma", 1, out, false).value.setOnes();
      add_param(prefix + "beta", 1, out, false);
      running_.emplace_back(out);
      in = out;
    }
  } else {
    add_param("event_proj.weight", static_cast<Index>(c.event_features), step_width, true);
    add_param("event_proj.bias", 1, step_width, false);
  }
  if (c.uses_lstm()) {
    Index in = step_width;
    for (std::size_t l = 0; l < c.lstm_layers; ++l) {
      for (const char* dir : {"fwd", "bwd"}) {
        const std::string prefix = "lstm." + std::to_string(l) + "." + dir + ".";
        for (const char* g : kGates) {
          add_param(prefix + "W_x" + g, in, H, true);
          add_param(prefix + "W_h" + g, H, H, true);
          auto& bias = add_param(prefix + "b_" + g, 1, H, false);
          if (std::string_view(g) == "f") bias.value.setOnes();
        }
      }
      in = 2 * H;
    }
  } else if (c.variant == Variant::kNoLstm) {
    add_param("step_proj.weight", step_width, 2 * H, true);
    add_param("step_proj.bias", 1, 2 * H, false);
  }
  if (c.uses_attention()) {
    for (std::size_t h = 0; h < c.heads; ++h) {
      const std::string prefix = "attention.head" + std::to_string(h) + ".";
      for (const char* m : {"W_q", "W_k", "W_v"}) {
        add_param(prefix + m, 2 * H, static_cast<Index>(c.head_dim), true);
      }
    }
    add_param("attention.W_o", static_cast<Index>(c.heads * c.head_dim), 2 * H, true);
  }
  const Index pooled = c.variant == Variant::kGnnOnly ? step_width : 2 * H;
  add_param("classifier.weight", pooled, static_cast<Index>(c.classes), true);
  add_param("classifier.bias", 1, static_cast<Index>(c.classes), false);

  Rng rng(c.seed);
  for (auto& t : params_) {
    if (t.decay) glorot(t.value, rng);
  }
}

ag::Tensor& HybridModel::add_param(std::string name, Index rows, Index cols, bool decay) {
  params_.emplace_back(std::move(name), Matrix::Zero(rows, cols), decay);
  return params_.back();
}

std::size_t HybridModel::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return i;
  }
  throw ConfigError("model has no parameter '" + std::string(name) + "'");
}

std::vector<ag::Tensor*> HybridModel::parameters() {
  std::vector<ag::Tensor*> out;
  for (auto& t : params_) out.push_back(&t);
  return out;
}

std::vector<const ag::Tensor*> HybridModel::parameters() const {
  std::vector<const ag::Tensor*> out;
  for (const auto& t : params_) out.push_back(&t);
  return out;
}

ag::Tensor& HybridModel::parameter(std::string_view name) { return params_[index_of(name)]; }
const ag::Tensor& HybridModel::parameter(std::string_view name) const {
  return params_[index_of(name)];
}

std::size_t HybridModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : params_) n += static_cast<std::size_t>(t.value.size());
  return n;
}

ModelState HybridModel::state() const {
  ModelState s;
  for (const auto& t : params_) s.parameters.push_back(t.value);
  s.running = running_;
  return s;
}

void HybridModel::restore(const ModelState& s) {
  if (s.parameters.size() != params_.size() || s.running.size() != running_.size()) {
    throw ShapeError("restore: state does not match the model layout");
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (s.parameters[i].rows() != params_[i].value.rows() ||
        s.parameters[i].cols() != params_[i].value.cols()) {
      throw ShapeError("restore: shape mismatch for " + params_[i].name);
    }
    params_[i].value = s.parameters[i];
  }
  running_ = s.running;
}

void HybridModel::zero_grad() {
  for (auto& t : params_) t.zero_grad();
}

Var HybridModel::p(ag::Tape& tape, std::string_view name) {
  return tape.param(params_[index_of(name)]);
}

Var HybridModel::gcn_forward(ag::Tape& tape, std::span<const GraphInput* const> graphs,
                             ag::Mode mode, Rng& rng) {
  if (graphs.empty()) throw ShapeError("gcn_forward: no graphs");
  Index total = 0;
  auto blocks = std::make_shared<std::vector<Matrix>>();
  for (const GraphInput* g : graphs) {
    if (g->features.cols() != static_cast<Index>(config_.node_features)) {
      throw ShapeError("gcn_forward: node features have width " +
                       std::to_string(g->features.cols()) + ", model expects " +
                       std::to_string(config_.node_features));
    }
    if (g->adjacency.rows() != g->features.rows() || g->adjacency.cols() != g->features.rows()) {
      throw ShapeError("gcn_forward: adjacency does not match node count");
    }
    total += g->features.rows();
    blocks->push_back(g->adjacency);
  }
  Matrix x(total, static_cast<Index>(config_.node_features));
  Index row = 0;
  for (const GraphInput* g : graphs) {
    x.middleRows(row, g->features.rows()) = g->features;
    row += g->features.rows();
  }

  Var h = tape.constant(std::move(x));
  for (std::size_t l = 0; l < config_.gcn_dims.size(); ++l) {
    const std::string prefix = "gcn." + std::to_string(l) + ".";
    Var w = p(tape, prefix + "weight");
    // Propagate on the narrower side of the product.
    Var z = w.rows() < w.cols() ? matmul(block_diag_matmul(blocks, h), w)
                                : block_diag_matmul(blocks, matmul(h, w));
    h = relu(z);
    h = batchnorm(h, p(tape, prefix + "gamma"), p(tape, prefix + "beta"), mode, running_[l]);
    h = dropout(h, config_.gcn_dropout, mode, rng);
  }
  return h;
}

Var HybridModel::bilstm_forward(Var sequence, Index batch, ag::Mode mode, Rng& rng) {
  ag::Tape& tape = sequence.tape();
  const auto H = static_cast<Index>(config_.lstm_hidden);
  if (batch <= 0 || sequence.rows() % batch != 0) {
    throw ShapeError("bilstm_forward: " + std::to_string(sequence.rows()) +
                     " rows is not a multiple of the batch size");
  }
  const Index steps = sequence.rows() / batch;
  Var x = sequence;
  for (std::size_t l = 0; l < config_.lstm_layers; ++l) {
    std::vector<Var> directions;
    for (const char* dir : {"fwd", "bwd"}) {
      const std::string prefix = "lstm." + std::to_string(l) + "." + dir + ".";
      std::vector<Var> wx, wh, b;
      for (const char* g : kGates) {
        wx.push_back(p(tape, prefix + "W_x" + g));
        wh.push_back(p(tape, prefix + "W_h" + g));
        b.push_back(p(tape, prefix + "b_" + g));
      }
      if (x.cols() != wx[0].rows()) {
        throw ShapeError("bilstm_forward: input width " + std::to_string(x.cols()) +
                         ", layer expects " + std::to_string(wx[0].rows()));
      }
      // Gate blocks in the order i, f, o, c.
      Var xw = add_row(matmul(x, concat_cols(wx)), concat_cols(b));
      Var w_h = concat_cols(wh);
      Var h = tape.constant(Matrix::Zero(batch, H));
      Var c = tape.constant(Matrix::Zero(batch, H));
      std::vector<Var> outputs(static_cast<std::size_t>(steps));
      const bool forward = std::string_view(dir) == "fwd";
      for (Index k = 0; k < steps; ++k) {
        const Index t = forward ? k : steps - 1 - k;
        Var z = add(slice_rows(xw, t * batch, batch), matmul(h, w_h));
        Var i = sigmoid(slice_cols(z, 0, H));
        Var f = sigmoid(slice_cols(z, H, H));
        Var o = sigmoid(slice_cols(z, 2 * H, H));
        Var cand = tanh(slice_cols(z, 3 * H, H));
        c = add(mul(f, c), mul(i, cand));
        h = mul(o, tanh(c));
        outputs[static_cast<std::size_t>(t)] = h;
      }
      directions.push_back(concat_rows(outputs));
    }
    x = concat_cols(directions);
    if (l + 1 < config_.lstm_layers) x = dropout(x, config_.lstm_dropout, mode, rng);
  }
  return x;
}

AttentionOutput HybridModel::multi_head_attention(Var states, Index batch) {
  ag::Tape& tape = states.tape();
  const auto width = static_cast<Index>(config_.heads * config_.head_dim);
  if (states.cols() != width) {
    throw ShapeError("multi_head_attention: input width " + std::to_string(states.cols()) +
                     ", expected heads * head_dim = " + std::to_string(width));
  }
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(config_.head_dim));
  AttentionOutput out;
  std::vector<Var> heads;
  for (std::size_t i = 0; i < config_.heads; ++i) {
    const std::string prefix = "attention.head" + std::to_string(i) + ".";
    Var q = matmul(states, p(tape, prefix + "W_q"));
    Var k = matmul(states, p(tape, prefix + "W_k"));
    Var v = matmul(states, p(tape, prefix + "W_v"));
    Var weights = softmax_rows(scale(group_matmul(q, k, batch, true), inv_sqrt_dk));
    heads.push_back(group_matmul(weights, v, batch, false));
    out.weights.push_back(weights);
  }
  out.output = matmul(concat_cols(heads), p(tape, "attention.W_o"));
  return out;
}

Var HybridModel::pool_and_classify(Var states, Index batch) {
  ag::Tape& tape = states.tape();
  Var pooled = group_mean_rows(states, batch);
  return add_row(matmul(pooled, p(tape, "classifier.weight")), p(tape, "classifier.bias"));
}

Var HybridModel::step_sequence(ag::Tape& tape, std::span<const WindowInput* const> batch,
                               ag::Mode mode, Rng& rng) {
  const auto B = static_cast<Index>(batch.size());
  const auto T = static_cast<Index>(config_.seq_len);
  if (!config_.uses_graph()) {
    Matrix x(T * B, static_cast<Index>(config_.event_features));
    for (Index b = 0; b < B; ++b) {
      const Matrix& ev = batch[static_cast<std::size_t>(b)]->events;
      if (ev.rows() != T || ev.cols() != static_cast<Index>(config_.event_features)) {
        throw ShapeError("forward: window event matrix is " + std::to_string(ev.rows()) + "x" +
                         std::to_string(ev.cols()) + ", model expects " + std::to_string(T) +
                         "x" + std::to_string(config_.event_features));
      }
      for (Index t = 0; t < T; ++t) x.row(t * B + b) = ev.row(t);
    }
    return add_row(matmul(tape.constant(std::move(x)), p(tape, "event_proj.weight")),
                   p(tape, "event_proj.bias"));
  }

  std::vector<const GraphInput*> graphs;
  std::vector<Index> offsets;
  Index offset = 0;
  for (const WindowInput* w : batch) {
    if (!w->graph) throw DataError("forward: window has no graph");
    graphs.push_back(w->graph.get());
    offsets.push_back(offset);
    offset += w->graph->features.rows();
  }
  Var nodes = gcn_forward(tape, graphs, mode, rng);
  std::vector<Index> src(static_cast<std::size_t>(T * B));
  std::vector<Index> dst(src.size());
  for (Index b = 0; b < B; ++b) {
    const WindowInput& w = *batch[static_cast<std::size_t>(b)];
    const Index n = w.graph->features.rows();
    for (Index t = 0; t < T; ++t) {
      const Index s = w.src[static_cast<std::size_t>(t)];
      const Index d = w.dst[static_cast<std::size_t>(t)];
      if (s < 0 || s >= n || d < 0 || d >= n) {
        throw DataError("forward: event endpoint outside its window graph");
      }
      src[static_cast<std::size_t>(t * B + b)] = offsets[static_cast<std::size_t>(b)] + s;
      dst[static_cast<std::size_t>(t * B + b)] = offsets[static_cast<std::size_t>(b)] + d;
    }
  }
  return scale(add(gather_rows(nodes, std::move(src)), gather_rows(nodes, std::move(dst))), 0.5);
}

ForwardResult HybridModel::forward(ag::Tape& tape, std::span<const WindowInput* const> batch,
                                   ag::Mode mode, Rng& rng) {
  if (batch.empty()) throw ShapeError("forward: empty batch");
  const auto B = static_cast<Index>(batch.size());
  const auto T = static_cast<Index>(config_.seq_len);
  for (const WindowInput* w : batch) {
    if (config_.uses_graph() &&
        (w->src.size() != config_.seq_len || w->dst.size() != config_.seq_len)) {
      throw ShapeError("forward: window has " + std::to_string(w->src.size()) +
                       " events, model expects T=" + std::to_string(T));
    }
  }

  ForwardResult result;
  result.batch = B;
  Var steps = step_sequence(tape, batch, mode, rng);  // time-major
  Var states = config_.uses_lstm() ? bilstm_forward(steps, B, mode, rng) : steps;
  states = gather_rows(states, time_to_window_major(T, B));
  if (config_.variant == Variant::kNoLstm) {
    states = add_row(matmul(states, p(tape, "step_proj.weight")), p(tape, "step_proj.bias"));
  }
  if (config_.uses_attention()) {
    AttentionOutput att = multi_head_attention(states, B);
    states = att.output;
    for (const Var& w : att.weights) result.attention.push_back(w.value());
  }
  result.logits = pool_and_classify(states, B);
  result.probabilities = softmax_rows(result.logits);
  return result;
}

Var HybridModel::l2_penalty(ag::Tape& tape) {
  Var total;
  for (auto& t : params_) {
    if (!t.decay) continue;
    Var s = sum_squares(tape.param(t));
    total = total.valid() ? add(total, s) : s;
  }
  return total;
}

Var HybridModel::loss(const ForwardResult& result, std::span<const int> labels) {
  Var ce = cross_entropy(result.logits, labels);
  if (config_.l2 == 0.0) return ce;
  return add(ce, scale(l2_penalty(result.logits.tape()), config_.l2));
}

}  // namespace hids
