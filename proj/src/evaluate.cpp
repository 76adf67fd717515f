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

#include "hids/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "hids/error.hpp"

namespace hids {
namespace {

void check_inputs(const HybridModel& model, std::span<const WindowInput> windows,
                  std::span<const int> labels, const std::vector<std::string>& class_names) {
  const ModelConfig& c = model.config();
  if (windows.size() != labels.size()) {
    throw ShapeError("evaluate: " + std::to_string(windows.size()) + " windows vs " +
                     std::to_string(labels.size()) + " labels");
  }
  if (c.classes != class_names.size()) {
    throw ShapeError("evaluate: model has " + std::to_string(c.classes) + " classes, data has " +
                     std::to_string(class_names.size()));
  }
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const WindowInput& w = windows[i];
    if (c.uses_graph()) {
      if (!w.graph) throw ShapeError("evaluate: window " + std::to_string(i) + " has no graph");
      if (static_cast<std::size_t>(w.graph->features.cols()) != c.node_features) {
        throw ShapeError("evaluate: window " + std::to_string(i) + " has " +
                         std::to_string(w.graph->features.cols()) +
                         " node features, model expects " + std::to_string(c.node_features));
      }
      if (w.src.size() != c.seq_len) {
        throw ShapeError("evaluate: window " + std::to_string(i) + " has " +
                         std::to_string(w.src.size()) + " events, model expects " +
                         std::to_string(c.seq_len));
      }
    }
    if (c.uses_events()) {
      if (static_cast<std::size_t>(w.events.cols()) != c.event_features ||
          static_cast<std::size_t>(w.events.rows()) != c.seq_len) {
        throw ShapeError("evaluate: window " + std::to_string(i) + " event matrix is " +
                         std::to_string(w.events.rows()) + "x" + std::to_string(w.events.cols()) +
                         ", model expects " + std::to_string(c.seq_len) + "x" +
                         std::to_string(c.event_features));
      }
    }
  }
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Evaluation evaluate(HybridModel& model, std::span<const WindowInput> windows,
                    std::span<const int> labels, const std::vector<std::string>& class_names,
                    std::size_t batch_size) {
  check_inputs(model, windows, labels, class_names);
  Evaluation e;
  e.probabilities = predict_probabilities(model, windows, batch_size);
  e.predictions = argmax_rows(e.probabilities);
  e.report = compute_metrics(e.probabilities, labels, class_names);
  return e;
}

std::vector<AblationRow> ablate(std::span<const WindowInput> train_windows,
                                std::span<const int> train_labels,
                                std::span<const WindowInput> test_windows,
                                std::span<const int> test_labels,
                                const std::vector<std::string>& class_names,
                                const ModelConfig& model_config, const TrainConfig& train_config,
                                std::span<const Variant> variants,
                                const AblationProgress& progress) {
  std::vector<AblationRow> rows;
  for (Variant v : variants) {
    ModelConfig config = model_config;
    config.variant = v;
    HybridModel model(config);
    AblationRow row;
    row.variant = v;
    EpochCallback on_epoch;
    if (progress) on_epoch = [&](const EpochRecord& r) { progress(v, r); };
    row.training = fit(model, train_windows, train_labels, train_config, on_epoch);
    row.report =
        evaluate(model, test_windows, test_labels, class_names, train_config.batch_size).report;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string ablation_table(std::span<const AblationRow> rows) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-14s %9s %9s %9s %9s %9s %7s\n", "Variant", "Accuracy",
                "Precision", "Recall", "F1-Score", "AUC-ROC", "Epochs");
  out << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-14s %9.4f %9.4f %9.4f %9.4f %9.4f %7zu\n",
                  std::string(to_string(r.variant)).c_str(), r.report.accuracy,
                  r.report.macro_precision, r.report.macro_recall, r.report.macro_f1,
                  r.report.macro_auc, r.training.epochs.size());
    out << line;
  }
  out << "\n[ablation]\n";
  for (const auto& r : rows) {
    const std::string v(to_string(r.variant));
    out << v << ".accuracy=" << num(r.report.accuracy) << '\n'
        << v << ".macro_precision=" << num(r.report.macro_precision) << '\n'
        << v << ".macro_recall=" << num(r.report.macro_recall) << '\n'
        << v << ".macro_f1=" << num(r.report.macro_f1) << '\n'
        << v << ".macro_auc=" << num(r.report.macro_auc) << '\n'
        << v << ".best_epoch=" << r.training.best_epoch << '\n';
  }
  return out.str();
}

std::vector<double> salience(std::span<const ag::Matrix> heads) {
  if (heads.empty()) return {};
  ag::Matrix total = ag::Matrix::Zero(1, heads.front().cols());
  for (const auto& h : heads) total += h.colwise().sum();
  total /= static_cast<double>(heads.size());
  return {total.data(), total.data() + total.size()};
}

std::vector<AttentionTrace> attention_traces(HybridModel& model,
                                             std::span<const WindowInput> windows,
                                             std::span<const int> labels,
                                             std::span<const std::size_t> ids,
                                             std::size_t batch_size) {
  if (!model.config().uses_attention()) {
    throw ConfigError("attention traces need a variant with attention, not " +
                      std::string(to_string(model.config().variant)));
  }
  if (windows.size() != labels.size() || (!ids.empty() && ids.size() != windows.size())) {
    throw ShapeError("attention_traces: windows, labels and ids disagree in length");
  }
  if (batch_size == 0) throw ConfigError("attention_traces: batch_size must be positive");
  const auto T = static_cast<ag::Index>(model.config().seq_len);
  std::vector<AttentionTrace> traces;
  Rng unused(0);
  ag::Tape tape;
  for (std::size_t start = 0; start < windows.size(); start += batch_size) {
    const std::size_t n = std::min(batch_size, windows.size() - start);
    std::vector<const WindowInput*> batch;
    for (std::size_t i = 0; i < n; ++i) batch.push_back(&windows[start + i]);
    tape.reset();
    const ForwardResult r = model.forward(tape, batch, ag::Mode::kInfer, unused);
    const auto pred = argmax_rows(r.probabilities.value());
    for (std::size_t b = 0; b < n; ++b) {
      AttentionTrace t;
      t.window = ids.empty() ? start + b : ids[start + b];
      t.true_class = labels[start + b];
      t.predicted_class = pred[b];
      for (const auto& head : r.attention) {
        t.heads.push_back(head.middleRows(static_cast<ag::Index>(b) * T, T));
      }
      t.salience = salience(t.heads);
      traces.push_back(std::move(t));
    }
  }
  return traces;
}

void write_attention(std::ostream& out, std::span<const AttentionTrace> traces,
                     const std::vector<std::string>& class_names) {
  for (const auto& t : traces) {
    for (std::size_t h = 0; h < t.heads.size(); ++h) {
      const ag::Matrix& w = t.heads[h];
      if (w.rows() != w.cols()) throw ShapeError("attention trace: head matrix is not square");
      for (ag::Index r = 0; r < w.rows(); ++r) {
        const double s = w.row(r).sum();
        if (!(std::abs(s - 1.0) <= 1e-9)) {
          throw NumericError("attention trace: window " + std::to_string(t.window) + " head " +
                             std::to_string(h) + " row " + std::to_string(r) + " sums to " +
                             num(s));
        }
      }
    }
  }
  out << "# hids attention trace\n"
      << "# per window: HEAD blocks of T rows x T weights (row = query step), then SALIENCE,\n"
      << "# the mean over heads of the column sums\n";
  for (const auto& t : traces) {
    const std::size_t T = t.salience.size();
    out << "WINDOW " << t.window << " T " << T << " HEADS " << t.heads.size() << " TRUE "
        << class_names.at(static_cast<std::size_t>(t.true_class)) << " PRED "
        << class_names.at(static_cast<std::size_t>(t.predicted_class)) << '\n';
    for (std::size_t h = 0; h < t.heads.size(); ++h) {
      out << "HEAD " << h << '\n';
      for (ag::Index r = 0; r < t.heads[h].rows(); ++r) {
        for (ag::Index c = 0; c < t.heads[h].cols(); ++c) {
          out << (c ? " " : "") << num(t.heads[h](r, c));
        }
        out << '\n';
      }
    }
    out << "SALIENCE\n";
    for (std::size_t i = 0; i < T; ++i) out << (i ? " " : "") << num(t.salience[i]);
    out << '\n';
  }
}

void export_attention(const std::filesystem::path& path, std::span<const AttentionTrace> traces,
                      const std::vector<std::string>& class_names) {
  std::ostringstream buffer;
  write_attention(buffer, traces, class_names);
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << buffer.str();
  if (!out) throw DataError("write failed for " + path.string());
}

std::vector<AttentionTrace> read_attention(std::istream& in,
                                           const std::vector<std::string>& class_names) {
  auto class_index = [&](const std::string& name) {
    const auto it = std::find(class_names.begin(), class_names.end(), name);
    if (it == class_names.end()) throw FormatError("attention trace: unknown class " + name);
    return static_cast<int>(it - class_names.begin());
  };
  auto next_line = [&](std::string& line) {
    while (std::getline(in, line)) {
      if (!line.empty() && line[0] != '#') return true;
    }
    return false;
  };
  auto read_row = [&](std::size_t n) {
    std::string line;
    if (!next_line(line)) throw FormatError("attention trace: truncated");
    std::istringstream s(line);
    std::vector<double> v(n);
    for (double& x : v) {
      if (!(s >> x)) throw FormatError("attention trace: short row");
    }
    return v;
  };
  std::vector<AttentionTrace> traces;
  std::string line;
  while (next_line(line)) {
    std::istringstream s(line);
    std::string tag, t_tag, h_tag, true_tag, pred_tag, true_name, pred_name;
    AttentionTrace t;
    std::size_t T = 0, heads = 0;
    if (!(s >> tag >> t.window >> t_tag >> T >> h_tag >> heads >> true_tag >> true_name >>
          pred_tag >> pred_name) ||
        tag != "WINDOW" || t_tag != "T" || h_tag != "HEADS" || true_tag != "TRUE" ||
        pred_tag != "PRED") {
      throw FormatError("attention trace: bad window header '" + line + "'");
    }
    t.true_class = class_index(true_name);
    t.predicted_class = class_index(pred_name);
    for (std::size_t h = 0; h < heads; ++h) {
      if (!next_line(line) || line.rfind("HEAD ", 0) != 0) {
        throw FormatError("attention trace: expected HEAD " + std::to_string(h));
      }
      ag::Matrix w(static_cast<ag::Index>(T), static_cast<ag::Index>(T));
      for (std::size_t r = 0; r < T; ++r) {
        const auto row = read_row(T);
        for (std::size_t c = 0; c < T; ++c) {
          w(static_cast<ag::Index>(r), static_cast<ag::Index>(c)) = row[c];
        }
      }
      t.heads.push_back(std::move(w));
    }
    if (!next_line(line) || line != "SALIENCE") throw FormatError("attention trace: expected SALIENCE");
    t.salience = read_row(T);
    traces.push_back(std::move(t));
  }
  return traces;
}

}  // namespace hids
