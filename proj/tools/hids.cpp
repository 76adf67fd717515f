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

// Command-line entry point: datagen, preprocess, build-graph, train,
// evaluate, ablate, explain and version.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hids/checkpoint.hpp"
#include "hids/csv.hpp"
#include "hids/config.hpp"
#include "hids/datagen.hpp"
#include "hids/error.hpp"
#include "hids/evaluate.hpp"
#include "hids/pipeline.hpp"

namespace {

using namespace hids;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

struct UsageError : Error {
  using Error::Error;
};

std::string flag_name(const std::string& key) {
  std::string s = key;
  for (char& c : s) {
    if (c == '_') c = '-';
  }
  return "--" + s;
}

// Adds one flag per config key plus --config, --set and --print-config.
class ConfigFlags {
 public:
  void attach(CLI::App* app) {
    app->add_option("--config", file_, "config file of key = value lines");
    app->add_option("--set", sets_, "extra key=value override (repeatable)");
    app->add_flag("--print-config", print_, "print the effective config and exit");
    const RunConfig defaults;
    for (const auto& k : RunConfig::keys()) {
      auto* opt = app->add_option(flag_name(k.name), values_[k.name], k.help);
      opt->default_str(defaults.get(k.name));
      options_[k.name] = opt;
    }
  }

  RunConfig resolve() const {
    RunConfig c;
    if (!file_.empty()) c.apply_file(file_);
    for (const auto& [key, opt] : options_) {
      if (opt->count() > 0) c.set(key, values_.at(key));
    }
    for (const auto& kv : sets_) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
      c.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    return c;
  }

  bool print() const { return print_; }

 private:
  std::string file_;
  std::vector<std::string> sets_;
  bool print_ = false;
  std::map<std::string, std::string> values_;
  std::map<std::string, CLI::Option*> options_;
};

void require(const std::string& value, const std::string& key, const std::string& command) {
  if (value.empty()) {
    throw UsageError(command + ": " + flag_name(key) + " is required (or set `" + key +
                     "` in the config file)");
  }
}

void warn(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed for " + path.string());
}

WindowOptions window_options(const RunConfig& c, const ModelConfig& model) {
  WindowOptions w = c.window_options();
  w.length = model.seq_len;
  w.graphs = model.uses_graph();
  w.events = model.uses_events();
  return w;
}

ModelConfig model_for(const RunConfig& c, const PreparedData& data) {
  ModelConfig m = c.model;
  m.classes = data.class_names.size();
  m.event_features = data.train.feature_names.size();
  return m;
}

// The checkpoint must match the requested architecture; its init seed is irrelevant here.
Checkpoint load_matching(const RunConfig& c, const PreparedData& data) {
  ModelConfig expected = model_for(c, data);
  expected.seed = load_checkpoint(c.checkpoint).model.config().seed;
  return load_checkpoint(c.checkpoint, expected);
}

EpochCallback progress(const std::string& tag) {
  return [tag](const EpochRecord& r) {
    std::fprintf(stderr, "%sepoch %3zu  loss %.6f  val_f1 %.4f\n", tag.c_str(), r.epoch, r.loss,
                 r.val_f1);
  };
}

int cmd_datagen(const std::string& out, const std::string& scenario_file,
                const std::optional<std::uint64_t>& seed, const std::optional<double>& duration,
                const std::optional<double>& rate, const std::optional<std::size_t>& entities,
                const std::optional<double>& missing, bool print) {
  ScenarioSpec spec = default_scenario();
  if (!scenario_file.empty()) {
    std::ifstream in(scenario_file);
    if (!in) throw ConfigError("cannot open scenario file " + scenario_file);
    std::stringstream text;
    text << in.rdbuf();
    spec = ScenarioSpec::from_text(text.str());
  }
  if (seed) spec.seed = *seed;
  if (duration) spec.duration = *duration;
  if (rate) spec.background_rate = *rate;
  if (entities) spec.entity_count = *entities;
  if (missing) spec.missing_rate = *missing;
  spec.validate();
  if (print) {
    std::cout << spec.to_text();
    return kExitOk;
  }
  require(out, "out", "datagen");
  const GeneratedData data = generate(spec);
  warn(data.warnings);
  write_generated(out, data);
  write_file(std::filesystem::path(out) / "scenario.txt", spec.to_text());
  std::cout << "wrote " << data.flows << " flows to " << out << "/flows.csv\n";
  for (const auto& [label, count] : data.label_counts) {
    std::cout << "  " << label << ": " << count << '\n';
  }
  return kExitOk;
}

int cmd_preprocess(const RunConfig& c, const std::string& out) {
  require(c.data, "data", "preprocess");
  require(c.schema, "schema", "preprocess");
  const std::string dir = out.empty() ? c.prepared : out;
  require(dir, "prepared", "preprocess");
  const SchemaSpec schema = SchemaSpec::load(c.schema);
  PreparedData data = prepare(parse_flow_csv(c.data, schema), schema, c.prepare);
  warn(data.warnings);
  save_prepared(dir, data);
  std::cout << "records " << data.records << ", duplicates removed " << data.duplicates_removed
            << ", train rows " << data.train.rows() << ", test rows " << data.test.rows()
            << ", features " << data.train.feature_names.size() << '\n';
  return kExitOk;
}

int cmd_build_graph(const RunConfig& c, const std::string& split, std::size_t index,
                    const std::string& out) {
  require(c.prepared, "prepared", "build-graph");
  if (split != "train" && split != "test") throw UsageError("--split must be train or test");
  const PreparedData data = load_prepared(c.prepared);
  const PreparedPart& part = split == "train" ? data.train : data.test;
  WindowOptions w = c.window_options();
  w.graphs = false;
  w.events = false;
  const WindowData windows = build_windows(part, data.class_names, w);
  warn(windows.set.warnings);
  const TrafficGraph g = window_graph(part, windows.set, index, w.failure_states);
  if (out.empty()) {
    write_graph(std::cout, g);
  } else {
    save_graph(out, g);
    std::cout << "window " << index << ": " << g.size() << " nodes, " << g.edges.size()
              << " edges -> " << out << '\n';
  }
  return kExitOk;
}

int cmd_train(const RunConfig& c, const std::string& log_path) {
  require(c.prepared, "prepared", "train");
  require(c.checkpoint, "checkpoint", "train");
  const PreparedData data = load_prepared(c.prepared);
  const ModelConfig mc = model_for(c, data);
  HybridModel model(mc);
  const WindowData train = build_windows(data.train, data.class_names, window_options(c, mc));
  warn(train.set.warnings);
  std::cerr << "training " << to_string(mc.variant) << " on " << train.size() << " windows ("
            << model.parameter_count() << " parameters)\n";
  const TrainReport report = fit(model, train.inputs, train.labels, c.train, progress(""));
  warn(report.warnings);
  save_checkpoint(c.checkpoint, model);
  write_file(log_path.empty() ? c.checkpoint + ".log" : log_path, report.to_log());
  std::cout << "best epoch " << report.best_epoch << " of " << report.epochs.size()
            << " (stop: " << report.stop_reason << "), validation macro-F1 "
            << report.best_val_f1 << '\n';
  return kExitOk;
}

int cmd_evaluate(const RunConfig& c) {
  require(c.prepared, "prepared", "evaluate");
  require(c.checkpoint, "checkpoint", "evaluate");
  const PreparedData data = load_prepared(c.prepared);
  Checkpoint ck = load_matching(c, data);
  const WindowData test =
      build_windows(data.test, data.class_names, window_options(c, ck.model.config()));
  warn(test.set.warnings);
  const Evaluation e =
      evaluate(ck.model, test.inputs, test.labels, data.class_names, c.train.batch_size);
  warn(e.report.warnings);
  const std::string text = to_text(e.report);
  if (!c.report.empty()) save_report(c.report, e.report);
  std::cout << text;
  return kExitOk;
}

int cmd_ablate(const RunConfig& c, const std::string& variant_list, const std::string& out) {
  require(c.prepared, "prepared", "ablate");
  std::vector<Variant> variants;
  const auto names = csv::parse(variant_list);
  if (names.size() != 1) throw UsageError("--variants expects a comma-separated list");
  for (const auto& name : names.front()) variants.push_back(parse_variant(name));
  const PreparedData data = load_prepared(c.prepared);
  ModelConfig mc = model_for(c, data);
  WindowOptions w = c.window_options();
  w.length = mc.seq_len;
  const WindowData train = build_windows(data.train, data.class_names, w);
  const WindowData test = build_windows(data.test, data.class_names, w);
  const auto rows = ablate(train.inputs, train.labels, test.inputs, test.labels, data.class_names,
                           mc, c.train, variants, [](Variant v, const EpochRecord& r) {
                             progress("[" + std::string(to_string(v)) + "] ")(r);
                           });
  const std::string table = ablation_table(rows);
  if (!out.empty()) write_file(out, table);
  std::cout << table;
  return kExitOk;
}

int cmd_explain(const RunConfig& c, const std::string& class_filter, std::size_t limit) {
  require(c.prepared, "prepared", "explain");
  require(c.checkpoint, "checkpoint", "explain");
  require(c.traces, "traces", "explain");
  const PreparedData data = load_prepared(c.prepared);
  Checkpoint ck = load_matching(c, data);
  const WindowData test =
      build_windows(data.test, data.class_names, window_options(c, ck.model.config()));
  std::optional<int> wanted;
  if (!class_filter.empty()) {
    const auto it = std::find(data.class_names.begin(), data.class_names.end(), class_filter);
    if (it == data.class_names.end()) throw UsageError("--class: unknown class " + class_filter);
    wanted = static_cast<int>(it - data.class_names.begin());
  }
  std::vector<WindowInput> picked;
  std::vector<int> labels;
  std::vector<std::size_t> ids;
  for (std::size_t i = 0; i < test.size() && picked.size() < limit; ++i) {
    if (wanted && test.labels[i] != *wanted) continue;
    picked.push_back(test.inputs[i]);
    labels.push_back(test.labels[i]);
    ids.push_back(i);
  }
  const auto traces = attention_traces(ck.model, picked, labels, ids, c.train.batch_size);
  export_attention(c.traces, traces, data.class_names);
  std::cout << "wrote " << traces.size() << " attention traces to " << c.traces << '\n';
  return kExitOk;
}

int run(int argc, char** argv) {
  CLI::App app{"Hybrid graph and sequence network intrusion detection"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "help for every subcommand");

  auto* version = app.add_subcommand("version", "print the version");

  auto* datagen = app.add_subcommand("datagen", "generate a labeled synthetic flow corpus");
  std::string dg_out, dg_scenario;
  std::optional<std::uint64_t> dg_seed;
  std::optional<double> dg_duration, dg_rate, dg_missing;
  std::optional<std::size_t> dg_entities;
  bool dg_print = false;
  const ScenarioSpec defaults = default_scenario();
  datagen->add_option("--out", dg_out, "output directory (flows.csv, schema.txt, scenario.txt)");
  datagen->add_option("--scenario", dg_scenario, "scenario file (default: built-in scenario)");
  datagen->add_option("--seed", dg_seed, "generator seed")->default_str(std::to_string(defaults.seed));
  datagen->add_option("--duration", dg_duration, "seconds of traffic")
      ->default_str(std::to_string(defaults.duration));
  datagen->add_option("--rate", dg_rate, "background flows per second")
      ->default_str(std::to_string(defaults.background_rate));
  datagen->add_option("--entities", dg_entities, "internal hosts")
      ->default_str(std::to_string(defaults.entity_count));
  datagen->add_option("--missing-rate", dg_missing, "share of continuous cells left blank")
      ->default_str(std::to_string(defaults.missing_rate));
  datagen->add_flag("--print-config", dg_print, "print the effective scenario and exit");

  ConfigFlags pre_flags, graph_flags, train_flags, eval_flags, ablate_flags, explain_flags;

  auto* preprocess = app.add_subcommand("preprocess", "clean, encode, select, split and balance");
  std::string pre_out;
  pre_flags.attach(preprocess);
  preprocess->add_option("--out", pre_out, "output directory (overrides --prepared)");

  auto* graph = app.add_subcommand("build-graph", "export the traffic graph of one window");
  std::string graph_split = "test", graph_out;
  std::size_t graph_index = 0;
  graph_flags.attach(graph);
  graph->add_option("--split", graph_split, "train or test")->capture_default_str();
  graph->add_option("--index", graph_index, "window index")->capture_default_str();
  graph->add_option("--out", graph_out, "graph file (default: stdout)");

  auto* train = app.add_subcommand("train", "train a model on prepared data");
  std::string train_log;
  train_flags.attach(train);
  train->add_option("--log", train_log, "epoch log (default: <checkpoint>.log)");

  auto* evaluate_cmd = app.add_subcommand("evaluate", "evaluate a checkpoint on the test split");
  eval_flags.attach(evaluate_cmd);

  auto* ablate_cmd = app.add_subcommand("ablate", "train and evaluate model variants");
  std::string ablate_variants = "full,no_attention,no_gnn,no_lstm,gnn_only,lstm_only", ablate_out;
  ablate_flags.attach(ablate_cmd);
  ablate_cmd->add_option("--variants", ablate_variants, "comma-separated variants")
      ->capture_default_str();
  ablate_cmd->add_option("--out", ablate_out, "ablation table file");

  auto* explain = app.add_subcommand("explain", "export attention traces for test windows");
  std::string explain_class;
  std::size_t explain_limit = 5;
  explain_flags.attach(explain);
  explain->add_option("--class", explain_class, "only windows of this true class");
  explain->add_option("--limit", explain_limit, "number of windows")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  auto with_config = [](const ConfigFlags& flags, auto&& body) {
    const RunConfig c = flags.resolve();
    c.validate();
    if (flags.print()) {
      std::cout << c.to_text();
      return kExitOk;
    }
    return body(c);
  };

  if (version->parsed()) {
    std::cout << "hids " << HIDS_VERSION << '\n';
    return kExitOk;
  }
  if (datagen->parsed()) {
    return cmd_datagen(dg_out, dg_scenario, dg_seed, dg_duration, dg_rate, dg_entities,
                       dg_missing, dg_print);
  }
  if (preprocess->parsed()) {
    return with_config(pre_flags, [&](const RunConfig& c) { return cmd_preprocess(c, pre_out); });
  }
  if (graph->parsed()) {
    return with_config(graph_flags, [&](const RunConfig& c) {
      return cmd_build_graph(c, graph_split, graph_index, graph_out);
    });
  }
  if (train->parsed()) {
    return with_config(train_flags, [&](const RunConfig& c) { return cmd_train(c, train_log); });
  }
  if (evaluate_cmd->parsed()) {
    return with_config(eval_flags, [&](const RunConfig& c) { return cmd_evaluate(c); });
  }
  if (ablate_cmd->parsed()) {
    return with_config(ablate_flags, [&](const RunConfig& c) {
      return cmd_ablate(c, ablate_variants, ablate_out);
    });
  }
  if (explain->parsed()) {
    return with_config(explain_flags, [&](const RunConfig& c) {
      return cmd_explain(c, explain_class, explain_limit);
    });
  }
  return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
}
