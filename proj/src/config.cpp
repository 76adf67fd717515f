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

#include "hids/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "hids/csv.hpp"
#include "hids/error.hpp"

namespace hids {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string_view::npos ? std::string() : std::string(s.substr(b, e - b + 1));
}

double parse_double(std::string_view key, std::string_view v) {
  const auto d = parse_number(v);
  if (!d) throw ConfigError(std::string(key) + ": expected a number, got '" + std::string(v) + "'");
  return *d;
}

std::uint64_t parse_unsigned(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError(std::string(key) + ": expected a non-negative integer, got '" +
                      std::string(v) + "'");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw ConfigError(std::string(key) + ": expected true or false, got '" + std::string(v) + "'");
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Entry {
  RunConfig::Key key;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define HIDS_DOUBLE(name, field, help)                                                  \
  Entry {                                                                               \
    {name, help}, [](RunConfig& c, std::string_view v) { c.field = parse_double(name, v); }, \
        [](const RunConfig& c) { return fmt(c.field); }                                 \
  }
#define HIDS_SIZE(name, field, help)                                                    \
  Entry {                                                                               \
    {name, help},                                                                       \
        [](RunConfig& c, std::string_view v) {                                          \
          c.field = static_cast<std::size_t>(parse_unsigned(name, v));                  \
        },                                                                              \
        [](const RunConfig& c) { return std::to_string(c.field); }                      \
  }
#define HIDS_PATH(name, field, help)                                                    \
  Entry {                                                                               \
    {name, help}, [](RunConfig& c, std::string_view v) { c.field = std::string(v); },   \
        [](const RunConfig& c) { return c.field; }                                      \
  }

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = {
      Entry{{"seed", "seed for splitting, oversampling, initialization and shuffling"},
            [](RunConfig& c, std::string_view v) {
              c.seed = parse_unsigned("seed", v);
              c.prepare.seed = c.seed;
              c.prepare.smote.seed = c.seed;
              c.model.seed = c.seed;
              c.train.seed = c.seed;
            },
            [](const RunConfig& c) { return std::to_string(c.seed); }},
      HIDS_PATH("data", data, "flow CSV"),
      HIDS_PATH("schema", schema, "schema file for the flow CSV"),
      HIDS_PATH("prepared", prepared, "prepared-data directory"),
      HIDS_PATH("checkpoint", checkpoint, "model checkpoint file"),
      HIDS_PATH("report", report, "metrics report file"),
      HIDS_PATH("traces", traces, "attention trace file"),
      HIDS_DOUBLE("train_fraction", prepare.train_fraction, "share of records used for training"),
      HIDS_DOUBLE("max_missing_fraction", prepare.preprocess.impute.max_missing_fraction,
                  "columns missing more than this share are dropped"),
      HIDS_DOUBLE("skew_threshold", prepare.preprocess.impute.skew_threshold,
                  "|skewness| above which median imputation replaces the mean"),
      HIDS_DOUBLE("collinearity_threshold", prepare.preprocess.collinearity_threshold,
                  "correlation above which the lower-information column is dropped"),
      Entry{{"mi_bins", "equal-frequency bins for mutual information"},
            [](RunConfig& c, std::string_view v) {
              c.prepare.preprocess.mi_bins = static_cast<int>(parse_unsigned("mi_bins", v));
            },
            [](const RunConfig& c) { return std::to_string(c.prepare.preprocess.mi_bins); }},
      HIDS_SIZE("top_k", prepare.preprocess.top_k, "features kept by mutual information"),
      Entry{{"smote", "oversample minority classes in the training split"},
            [](RunConfig& c, std::string_view v) { c.prepare.use_smote = parse_bool("smote", v); },
            [](const RunConfig& c) { return std::string(c.prepare.use_smote ? "true" : "false"); }},
      HIDS_DOUBLE("smote_ratio", prepare.smote.target_ratio,
                  "minority classes are topped up to this share of the majority"),
      Entry{{"smote_k", "nearest neighbours considered by SMOTE"},
            [](RunConfig& c, std::string_view v) {
              c.prepare.smote.k_neighbors = static_cast<int>(parse_unsigned("smote_k", v));
            },
            [](const RunConfig& c) { return std::to_string(c.prepare.smote.k_neighbors); }},
      HIDS_SIZE("window", model.seq_len, "events per window (sequence length)"),
      HIDS_SIZE("stride", stride, "events between consecutive window starts"),
      Entry{{"gcn_dims", "comma-separated graph convolution widths"},
            [](RunConfig& c, std::string_view v) {
              std::vector<std::size_t> dims;
              const auto rows = csv::parse(v);
              if (rows.size() != 1) throw ConfigError("gcn_dims: expected a comma-separated list");
              for (const auto& cell : rows.front()) {
                dims.push_back(static_cast<std::size_t>(parse_unsigned("gcn_dims", trim(cell))));
              }
              c.model.gcn_dims = std::move(dims);
            },
            [](const RunConfig& c) {
              std::string s;
              for (std::size_t i = 0; i < c.model.gcn_dims.size(); ++i) {
                s += (i ? "," : "") + std::to_string(c.model.gcn_dims[i]);
              }
              return s;
            }},
      HIDS_DOUBLE("gcn_dropout", model.gcn_dropout, "dropout after each graph convolution"),
      HIDS_SIZE("lstm_layers", model.lstm_layers, "stacked bidirectional LSTM layers"),
      HIDS_SIZE("lstm_hidden", model.lstm_hidden, "LSTM hidden size per direction"),
      HIDS_DOUBLE("lstm_dropout", model.lstm_dropout, "dropout between LSTM layers"),
      HIDS_SIZE("heads", model.heads, "attention heads"),
      HIDS_SIZE("head_dim", model.head_dim, "attention width per head"),
      HIDS_DOUBLE("l2", model.l2, "weight decay coefficient"),
      Entry{{"variant", "model variant: full, no_attention, no_gnn, no_lstm, gnn_only, lstm_only"},
            [](RunConfig& c, std::string_view v) { c.model.variant = parse_variant(v); },
            [](const RunConfig& c) { return std::string(to_string(c.model.variant)); }},
      HIDS_SIZE("batch_size", train.batch_size, "windows per optimizer step"),
      HIDS_DOUBLE("lr", train.lr, "Adam learning rate"),
      HIDS_SIZE("max_epochs", train.max_epochs, "epoch limit"),
      HIDS_SIZE("patience", train.patience, "epochs without validation improvement before stopping"),
      HIDS_DOUBLE("val_fraction", train.val_fraction, "share of training windows held out for validation"),
      HIDS_DOUBLE("beta1", train.beta1, "Adam first-moment decay"),
      HIDS_DOUBLE("beta2", train.beta2, "Adam second-moment decay"),
      HIDS_DOUBLE("eps", train.eps, "Adam denominator offset"),
      HIDS_DOUBLE("clip_norm", train.clip_norm, "global gradient norm limit, 0 disables"),
      HIDS_DOUBLE("min_improvement", train.min_improvement,
                  "validation F1 gain that resets patience"),
  };
  return table;
}

#undef HIDS_DOUBLE
#undef HIDS_SIZE
#undef HIDS_PATH

const Entry& find_entry(std::string_view key) {
  for (const auto& e : entries()) {
    if (e.key.name == key) return e;
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

}  // namespace

const std::vector<RunConfig::Key>& RunConfig::keys() {
  static const std::vector<Key> k = [] {
    std::vector<Key> out;
    for (const auto& e : entries()) out.push_back(e.key);
    return out;
  }();
  return k;
}

void RunConfig::set(std::string_view key, std::string_view value) {
  find_entry(key).set(*this, trim(value));
}

std::string RunConfig::get(std::string_view key) const { return find_entry(key).get(*this); }

void RunConfig::apply_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(number) + ": expected key = value");
    }
    try {
      set(trim(std::string_view(line).substr(0, eq)), std::string_view(line).substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(number) + ": " + e.what());
    }
  }
}

void RunConfig::apply_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    apply_text(buffer.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& e : entries()) out += e.key.name + " = " + e.get(*this) + "\n";
  return out;
}

void RunConfig::validate() const {
  if (!(prepare.train_fraction > 0.0 && prepare.train_fraction < 1.0)) {
    throw ConfigError("train_fraction must lie in (0, 1)");
  }
  if (stride < 1) throw ConfigError("stride must be at least 1");
  if (prepare.preprocess.top_k < 1) throw ConfigError("top_k must be at least 1");
  if (prepare.preprocess.mi_bins < 1) throw ConfigError("mi_bins must be at least 1");
  model.validate();
  train.validate();
}

WindowOptions RunConfig::window_options() const {
  WindowOptions w;
  w.length = model.seq_len;
  w.stride = stride;
  w.failure_states = prepare.graph_columns.failure_states;
  return w;
}

}  // namespace hids
