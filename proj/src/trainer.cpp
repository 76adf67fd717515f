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

#include "hids/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>

#include "hids/error.hpp"
#include "hids/metrics.hpp"
#include "hids/preprocess.hpp"

namespace hids {
namespace {

std::vector<const WindowInput*> pointers(std::span<const WindowInput> windows,
                                         std::span<const std::size_t> idx) {
  std::vector<const WindowInput*> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(&windows[i]);
  return out;
}

}  // namespace

void adam_step(std::span<ag::Tensor* const> params, AdamState& state, const AdamConfig& c) {
  if (state.m.empty() && state.v.empty()) {
    for (const ag::Tensor* t : params) {
      state.m.push_back(ag::Matrix::Zero(t->value.rows(), t->value.cols()));
      state.v.push_back(ag::Matrix::Zero(t->value.rows(), t->value.cols()));
    }
  }
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw ShapeError("adam_step: optimizer state holds " + std::to_string(state.m.size()) +
                     " moments for " + std::to_string(params.size()) + " parameters");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correct1 = 1.0 - std::pow(c.beta1, t);
  const double correct2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    ag::Tensor& p = *params[k];
    ag::Matrix& m = state.m[k];
    ag::Matrix& v = state.v[k];
    if (m.rows() != p.value.rows() || m.cols() != p.value.cols() || v.rows() != m.rows() ||
        v.cols() != m.cols()) {
      throw ShapeError("adam_step: moment shape mismatch for " + p.name);
    }
    if (p.grad.size() != 0 && (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols())) {
      throw ShapeError("adam_step: gradient shape mismatch for " + p.name);
    }
    if (p.grad.size() == 0) {
      m *= c.beta1;
      v *= c.beta2;
    } else {
      m = c.beta1 * m + (1.0 - c.beta1) * p.grad;
      v = c.beta2 * v + (1.0 - c.beta2) * p.grad.cwiseProduct(p.grad);
    }
    const ag::Matrix m_hat = m / correct1;
    const ag::Matrix v_hat = v / correct2;
    p.value.array() -= c.lr * m_hat.array() / (v_hat.array().sqrt() + c.eps);
  }
}

double clip_gradients(std::span<ag::Tensor* const> params, double max_norm) {
  double sq = 0.0;
  for (const ag::Tensor* t : params) {
    if (t->grad.size() != 0) sq += t->grad.squaredNorm();
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (ag::Tensor* t : params) {
      if (t->grad.size() != 0) t->grad *= s;
    }
  }
  return norm;
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("train config: " + msg); };
  if (!(val_fraction > 0.0 && val_fraction < 0.5)) fail("val_fraction must lie in (0, 0.5)");
  if (patience < 1) fail("patience must be at least 1");
  if (batch_size < 1) fail("batch_size must be at least 1");
  if (max_epochs < 1) fail("max_epochs must be at least 1");
  if (!(lr >= 0.0)) fail("lr must be non-negative");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) fail("betas must lie in [0,1)");
  if (!(eps > 0.0)) fail("eps must be positive");
  if (!(clip_norm >= 0.0)) fail("clip_norm must be non-negative");
}

std::string TrainReport::to_log() const {
  std::ostringstream out;
  out << "epoch,loss,val_f1\n";
  for (const auto& e : epochs) {
    char line[96];
    std::snprintf(line, sizeof line, "%zu,%.17g,%.17g\n", e.epoch, e.loss, e.val_f1);
    out << line;
  }
  return out.str();
}

ag::Matrix predict_probabilities(HybridModel& model, std::span<const WindowInput> windows,
                                 std::size_t batch_size) {
  if (batch_size == 0) throw ConfigError("predict: batch_size must be positive");
  ag::Matrix out(static_cast<ag::Index>(windows.size()),
                 static_cast<ag::Index>(model.config().classes));
  Rng unused(0);
  ag::Tape tape;
  for (std::size_t start = 0; start < windows.size(); start += batch_size) {
    const std::size_t n = std::min(batch_size, windows.size() - start);
    std::vector<const WindowInput*> batch;
    for (std::size_t i = 0; i < n; ++i) batch.push_back(&windows[start + i]);
    tape.reset();
    const auto result = model.forward(tape, batch, ag::Mode::kInfer, unused);
    out.middleRows(static_cast<ag::Index>(start), static_cast<ag::Index>(n)) =
        result.probabilities.value();
  }
  return out;
}

TrainReport fit(HybridModel& model, std::span<const WindowInput> windows,
                std::span<const int> labels, const TrainConfig& config,
                const EpochCallback& on_epoch) {
  config.validate();
  const auto start_time = std::chrono::steady_clock::now();
  if (windows.empty()) throw DataError("fit: empty training set");
  if (windows.size() != labels.size()) {
    throw ShapeError("fit: " + std::to_string(windows.size()) + " windows vs " +
                     std::to_string(labels.size()) + " labels");
  }
  const std::size_t classes = model.config().classes;
  std::set<int> distinct;
  for (int l : labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= classes) {
      throw DataError("fit: label " + std::to_string(l) + " outside the model's " +
                      std::to_string(classes) + " classes");
    }
    distinct.insert(l);
  }
  if (distinct.size() < 2) throw DataError("fit: training set holds a single class");

  TrainReport report;
  auto split = stratified_split(labels, 1.0 - config.val_fraction, config.seed, true);
  if (split.test.empty()) {
    report.warnings.push_back("validation split is empty; monitoring the training windows");
    split.test = split.train;
  }
  report.train_windows = split.train.size();
  report.val_windows = split.test.size();

  std::vector<WindowInput> val_windows;
  std::vector<int> val_labels;
  for (std::size_t i : split.test) {
    val_windows.push_back(windows[i]);
    val_labels.push_back(labels[i]);
  }

  Rng order_rng(config.seed);
  Rng dropout_rng(config.seed ^ 0x5DEECE66DULL);
  const AdamConfig adam{config.lr, config.beta1, config.beta2, config.eps};
  AdamState state;
  auto params = model.parameters();
  ModelState best = model.state();
  double best_f1 = -1.0;
  std::size_t stale = 0;
  report.stop_reason = "max_epochs";

  std::vector<std::size_t> order = split.train;
  ag::Tape tape;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    order_rng.shuffle(order.begin(), order.end());
    double loss_sum = 0.0;
    for (std::size_t s = 0; s < order.size(); s += config.batch_size) {
      const std::size_t n = std::min(config.batch_size, order.size() - s);
      const std::span<const std::size_t> idx(order.data() + s, n);
      const auto batch = pointers(windows, idx);
      std::vector<int> batch_labels;
      for (std::size_t i : idx) batch_labels.push_back(labels[i]);

      tape.reset();
      model.zero_grad();
      const auto result = model.forward(tape, batch, ag::Mode::kTrain, dropout_rng);
      ag::Var loss = model.loss(result, batch_labels);
      const double lv = loss.value()(0, 0);
      tape.backward(loss, ag::Retain::kNothing);
      if (config.clip_norm > 0.0) clip_gradients(params, config.clip_norm);
      adam_step(params, state, adam);
      loss_sum += lv * static_cast<double>(n);
    }
    tape.reset();

    const ag::Matrix probs = predict_probabilities(model, val_windows, config.batch_size);
    const auto cm = confusion(val_labels, argmax_rows(probs), classes);
    const EpochRecord record{epoch, loss_sum / static_cast<double>(order.size()), macro_f1(cm)};
    report.epochs.push_back(record);
    if (on_epoch) on_epoch(record);

    if (record.val_f1 > best_f1 + config.min_improvement) {
      best_f1 = record.val_f1;
      best = model.state();
      report.best_epoch = epoch;
      stale = 0;
    } else if (++stale >= config.patience) {
      report.stop_reason = "early";
      break;
    }
  }
  model.restore(best);
  report.best_val_f1 = best_f1;
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
  return report;
}

}  // namespace hids
