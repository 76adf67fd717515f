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

#include <algorithm>
#include <fstream>

#include "hids/error.hpp"
#include "hids/preprocess.hpp"

namespace hids {
namespace {

using nlohmann::json;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

json impute_json(const ImputeStep& s) {
  json fills = json::array();
  for (const auto& f : s.fills) {
    json j{{"column", f.column}, {"method", f.method}};
    if (f.method == "mode") {
      j["category"] = f.category;
    } else {
      j["value"] = f.value;
    }
    fills.push_back(std::move(j));
  }
  return {{"kind", "impute"}, {"dropped", s.dropped}, {"fills", fills}, {"warnings", s.warnings}};
}

json one_hot_json(const OneHotStep& s) {
  json enc = json::array();
  for (const auto& e : s.encodings) {
    enc.push_back({{"column", e.column}, {"vocabulary", e.vocabulary}});
  }
  return {{"kind", "one_hot"}, {"encodings", enc}};
}

json minmax_json(const MinMaxStep& s) {
  json ranges = json::array();
  for (const auto& r : s.ranges) {
    ranges.push_back({{"column", r.column}, {"min", r.min}, {"max", r.max}});
  }
  return {{"kind", "minmax"}, {"ranges", ranges}};
}

json select_json(const SelectStep& s) {
  return {{"kind", "select"},
          {"reason", s.reason},
          {"dropped", s.dropped},
          {"details", s.details},
          {"warnings", s.warnings}};
}

bool is_step_op(const std::string& op) {
  return op == "impute" || op == "one_hot" || op == "minmax" || op == "prune_collinear" ||
         op == "select_top_k";
}

}  // namespace

void apply(const TransformStep& step, Dataset& data) {
  std::visit([&](const auto& s) { hids::apply(s, data); }, step);
}

nlohmann::json to_json(const TransformStep& step) {
  return std::visit(Overloaded{[](const ImputeStep& s) { return impute_json(s); },
                               [](const OneHotStep& s) { return one_hot_json(s); },
                               [](const MinMaxStep& s) { return minmax_json(s); },
                               [](const SelectStep& s) { return select_json(s); }},
                    step);
}

TransformStep step_from_json(const nlohmann::json& j) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "impute") {
      ImputeStep s;
      s.dropped = j.at("dropped").get<std::vector<std::string>>();
      for (const auto& f : j.at("fills")) {
        ImputeStep::Fill fill;
        fill.column = f.at("column").get<std::string>();
        fill.method = f.at("method").get<std::string>();
        if (fill.method == "mode") {
          fill.category = f.at("category").get<std::string>();
        } else {
          fill.value = f.at("value").get<double>();
        }
        s.fills.push_back(std::move(fill));
      }
      s.warnings = j.value("warnings", std::vector<std::string>{});
      return s;
    }
    if (kind == "one_hot") {
      OneHotStep s;
      for (const auto& e : j.at("encodings")) {
        s.encodings.push_back({e.at("column").get<std::string>(),
                               e.at("vocabulary").get<std::vector<std::string>>()});
      }
      return s;
    }
    if (kind == "minmax") {
      MinMaxStep s;
      for (const auto& r : j.at("ranges")) {
        s.ranges.push_back({r.at("column").get<std::string>(), r.at("min").get<double>(),
                            r.at("max").get<double>()});
      }
      return s;
    }
    if (kind == "select") {
      SelectStep s;
      s.reason = j.at("reason").get<std::string>();
      s.dropped = j.at("dropped").get<std::vector<std::string>>();
      s.details = j.value("details", json::array());
      s.warnings = j.value("warnings", std::vector<std::string>{});
      return s;
    }
    throw FormatError("transform: unknown step kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw FormatError(std::string("transform: malformed step: ") + e.what());
  }
}

void Transform::apply(Dataset& data) const {
  for (const auto& step : steps) hids::apply(step, data);
}

nlohmann::json Transform::to_json() const {
  json steps_json = json::array();
  for (const auto& s : steps) steps_json.push_back(hids::to_json(s));
  return {{"format", kFormat}, {"class_names", class_names}, {"steps", steps_json}};
}

Transform Transform::from_json(const nlohmann::json& j) {
  Transform t;
  try {
    if (j.at("format").get<std::string>() != kFormat) {
      throw FormatError("transform: unsupported format '" + j.at("format").get<std::string>() +
                        "'");
    }
    t.class_names = j.at("class_names").get<std::vector<std::string>>();
    for (const auto& s : j.at("steps")) t.steps.push_back(step_from_json(s));
  } catch (const json::exception& e) {
    throw FormatError(std::string("transform: malformed document: ") + e.what());
  }
  return t;
}

void Transform::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << to_json().dump(2) << '\n';
}

Transform Transform::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw FormatError("transform " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

Transform Transform::from_provenance(const nlohmann::json& log,
                                     std::vector<std::string> class_names) {
  Transform t;
  t.class_names = std::move(class_names);
  for (const auto& entry : log) {
    if (!entry.contains("op") || !is_step_op(entry["op"].get<std::string>())) continue;
    t.steps.push_back(step_from_json(entry.at("step")));
  }
  return t;
}

Transform fit_transform(Dataset& train, const PreprocessOptions& options) {
  Transform t;
  t.class_names = train.class_names;

  ImputeStep impute = fit_impute(train, options.impute);
  hids::apply(impute, train);
  t.steps.emplace_back(std::move(impute));

  OneHotStep one_hot = fit_one_hot(train);
  hids::apply(one_hot, train);
  t.steps.emplace_back(std::move(one_hot));

  MinMaxStep minmax = fit_minmax(train);
  hids::apply(minmax, train);
  t.steps.emplace_back(std::move(minmax));

  const auto mi = mutual_information_scores(train, options.mi_bins);
  SelectStep prune = fit_prune_collinear(train, options.collinearity_threshold, mi);
  std::vector<double> kept_mi;
  for (std::size_t i = 0; i < train.columns.size(); ++i) {
    if (std::find(prune.dropped.begin(), prune.dropped.end(), train.columns[i].name) ==
        prune.dropped.end()) {
      kept_mi.push_back(mi[i]);
    }
  }
  hids::apply(prune, train);
  t.steps.emplace_back(std::move(prune));

  SelectStep top = fit_select_top_k(train, kept_mi, options.top_k);
  hids::apply(top, train);
  t.steps.emplace_back(std::move(top));
  return t;
}

}  // namespace hids
