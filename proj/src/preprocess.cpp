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

#include "hids/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "hids/error.hpp"
#include "hids/random.hpp"

namespace hids {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<double> finite_values(std::span<const double> v) {
  std::vector<double> out;
  out.reserve(v.size());
  for (double x : v) {
    if (std::isfinite(x)) out.push_back(x);
  }
  return out;
}

void erase_columns(Dataset& data, const std::vector<std::string>& names) {
  for (const auto& name : names) {
    const auto idx = data.column_index(name);
    if (!idx) throw DataError("transform expects column '" + name + "' which is absent");
    data.columns.erase(data.columns.begin() + static_cast<std::ptrdiff_t>(*idx));
  }
}

}  // namespace

// --- Column / Dataset -------------------------------------------------------

std::size_t Column::size() const {
  return kind == FeatureKind::kCategorical ? text.size() : values.size();
}

bool Column::missing(std::size_t row) const {
  return kind == FeatureKind::kCategorical ? text[row].empty() : std::isnan(values[row]);
}

double Column::missing_fraction() const {
  const std::size_t n = size();
  if (n == 0) return 0.0;
  std::size_t m = 0;
  for (std::size_t i = 0; i < n; ++i) m += missing(i) ? 1 : 0;
  return static_cast<double>(m) / static_cast<double>(n);
}

std::vector<std::string> Dataset::feature_names() const {
  std::vector<std::string> out;
  out.reserve(columns.size());
  for (const auto& c : columns) out.push_back(c.name);
  return out;
}

std::optional<std::size_t> Dataset::column_index(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].name == name) return i;
  }
  return std::nullopt;
}

ag::Matrix Dataset::feature_matrix() const {
  ag::Matrix m(static_cast<ag::Index>(rows()), static_cast<ag::Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) {
    const Column& c = columns[j];
    if (c.kind == FeatureKind::kCategorical) {
      throw DataError("feature_matrix: column '" + c.name + "' is still categorical");
    }
    for (std::size_t i = 0; i < rows(); ++i) {
      if (std::isnan(c.values[i])) {
        throw DataError("feature_matrix: column '" + c.name + "' has missing values");
      }
      m(static_cast<ag::Index>(i), static_cast<ag::Index>(j)) = c.values[i];
    }
  }
  return m;
}

Dataset Dataset::subset(std::span<const std::size_t> rows_to_keep) const {
  Dataset out;
  out.class_names = class_names;
  out.provenance = provenance;
  for (const Column& c : columns) {
    Column nc{c.name, c.kind, {}, {}};
    if (c.kind == FeatureKind::kCategorical) {
      nc.text.reserve(rows_to_keep.size());
      for (std::size_t r : rows_to_keep) nc.text.push_back(c.text.at(r));
    } else {
      nc.values.reserve(rows_to_keep.size());
      for (std::size_t r : rows_to_keep) nc.values.push_back(c.values.at(r));
    }
    out.columns.push_back(std::move(nc));
  }
  for (std::size_t r : rows_to_keep) {
    out.labels.push_back(labels.at(r));
    out.source_rows.push_back(source_rows.at(r));
    out.synthetic.push_back(synthetic.at(r));
  }
  return out;
}

void Dataset::log(std::string op, nlohmann::json params) {
  params["op"] = std::move(op);
  provenance.push_back(std::move(params));
}

Dataset make_dataset(std::span<const FlowRecord> records, const SchemaSpec& schema,
                     const std::vector<std::string>& class_names) {
  Dataset d;
  d.class_names = class_names;
  std::size_t cont = 0;
  std::size_t cat = 0;
  for (const auto& spec : schema.columns) {
    if (spec.kind == ColumnKind::kContinuous) {
      Column c{spec.name, FeatureKind::kContinuous, {}, {}};
      c.values.reserve(records.size());
      for (const auto& r : records) c.values.push_back(r.continuous.at(cont).value_or(kNaN));
      d.columns.push_back(std::move(c));
      ++cont;
    } else if (spec.kind == ColumnKind::kCategorical) {
      Column c{spec.name, FeatureKind::kCategorical, {}, {}};
      c.text.reserve(records.size());
      for (const auto& r : records) c.text.push_back(r.categorical.at(cat));
      d.columns.push_back(std::move(c));
      ++cat;
    }
  }
  std::unordered_map<std::string, int> index;
  for (std::size_t i = 0; i < class_names.size(); ++i) index[class_names[i]] = static_cast<int>(i);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto it = index.find(records[i].label);
    if (it == index.end()) {
      throw DataError("record " + std::to_string(i) + ": label '" + records[i].label +
                      "' is not in the class table");
    }
    d.labels.push_back(it->second);
    d.source_rows.push_back(i);
    d.synthetic.push_back(0);
  }
  return d;
}

DedupResult deduplicate(std::vector<FlowRecord> records) {
  DedupResult out;
  std::unordered_set<std::string> seen;
  seen.reserve(records.size());
  for (auto& r : records) {
    std::string key;
    for (const auto& cell : r.cells) {
      key += cell;
      key += '\x1f';
    }
    if (seen.insert(std::move(key)).second) {
      out.records.push_back(std::move(r));
    } else {
      ++out.removed;
    }
  }
  return out;
}

// --- imputation -------------------------------------------------------------

double sample_skewness(std::span<const double> values) {
  const auto v = finite_values(values);
  const double n = static_cast<double>(v.size());
  if (v.size() < 3) return 0.0;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double m2 = 0.0;
  double m3 = 0.0;
  for (double x : v) {
    const double d = x - mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= n;
  m3 /= n;
  if (m2 <= 0.0) return 0.0;
  const double g1 = m3 / std::pow(m2, 1.5);
  return g1 * std::sqrt(n * (n - 1.0)) / (n - 2.0);
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid),
                   values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower =
      *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

ImputeStep fit_impute(const Dataset& data, const ImputeOptions& options) {
  ImputeStep step;
  for (const Column& c : data.columns) {
    if (c.kind == FeatureKind::kIndicator) continue;
    const double frac = c.missing_fraction();
    if (frac > options.max_missing_fraction) {
      step.dropped.push_back(c.name);
      if (frac >= 1.0) {
        step.warnings.push_back("column '" + c.name + "' is entirely missing; dropped");
      }
      continue;
    }
    const auto policy_it = options.policies.find(c.name);
    ImputePolicy policy = policy_it == options.policies.end() ? ImputePolicy::kAuto
                                                              : policy_it->second;
    ImputeStep::Fill fill;
    fill.column = c.name;
    if (c.kind == FeatureKind::kCategorical) {
      if (policy != ImputePolicy::kAuto && policy != ImputePolicy::kMode) {
        throw ConfigError("column '" + c.name + "' is categorical; only mode imputation applies");
      }
      std::map<std::string, std::size_t> counts;
      for (const auto& t : c.text) {
        if (!t.empty()) ++counts[t];
      }
      fill.method = "mode";
      std::size_t best = 0;
      for (const auto& [cat, n] : counts) {
        if (n > best) {
          best = n;
          fill.category = cat;
        }
      }
    } else {
      const auto v = finite_values(c.values);
      if (policy == ImputePolicy::kMode) {
        throw ConfigError("column '" + c.name + "' is continuous; mode imputation does not apply");
      }
      if (policy == ImputePolicy::kAuto) {
        policy = std::abs(sample_skewness(v)) > options.skew_threshold ? ImputePolicy::kMedian
                                                                       : ImputePolicy::kMean;
      }
      if (policy == ImputePolicy::kMedian) {
        fill.method = "median";
        fill.value = median(v);
      } else {
        fill.method = "mean";
        fill.value = v.empty() ? 0.0
                               : std::accumulate(v.begin(), v.end(), 0.0) /
                                     static_cast<double>(v.size());
      }
    }
    step.fills.push_back(std::move(fill));
  }
  return step;
}

void apply(const ImputeStep& step, Dataset& data) {
  erase_columns(data, step.dropped);
  for (const auto& fill : step.fills) {
    const auto idx = data.column_index(fill.column);
    if (!idx) throw DataError("transform expects column '" + fill.column + "' which is absent");
    Column& c = data.columns[*idx];
    if (c.kind == FeatureKind::kCategorical) {
      for (auto& t : c.text) {
        if (t.empty()) t = fill.category;
      }
    } else {
      for (auto& x : c.values) {
        if (std::isnan(x)) x = fill.value;
      }
    }
  }
  data.log("impute", {{"step", to_json(TransformStep(step))}});
}

Dataset impute_missing(Dataset data, const ImputeOptions& options) {
  apply(fit_impute(data, options), data);
  return data;
}

// --- encoding and scaling ---------------------------------------------------

OneHotStep fit_one_hot(const Dataset& data) {
  OneHotStep step;
  for (const Column& c : data.columns) {
    if (c.kind != FeatureKind::kCategorical) continue;
    OneHotStep::Encoding enc{c.name, {}};
    std::unordered_set<std::string> seen;
    for (const auto& t : c.text) {
      if (!t.empty() && seen.insert(t).second) enc.vocabulary.push_back(t);
    }
    step.encodings.push_back(std::move(enc));
  }
  return step;
}

void apply(const OneHotStep& step, Dataset& data) {
  for (const auto& enc : step.encodings) {
    const auto idx = data.column_index(enc.column);
    if (!idx) throw DataError("transform expects column '" + enc.column + "' which is absent");
    const Column source = std::move(data.columns[*idx]);
    if (source.kind != FeatureKind::kCategorical) {
      throw DataError("column '" + enc.column + "' is not categorical");
    }
    std::unordered_map<std::string, std::size_t> pos;
    for (std::size_t k = 0; k < enc.vocabulary.size(); ++k) pos[enc.vocabulary[k]] = k;
    const std::size_t width = enc.vocabulary.size() + 1;
    std::vector<Column> indicators(width);
    for (std::size_t k = 0; k < width; ++k) {
      indicators[k].name = enc.column + "=" +
                           (k < enc.vocabulary.size() ? enc.vocabulary[k]
                                                      : std::string(kUnseenCategory));
      indicators[k].kind = FeatureKind::kIndicator;
      indicators[k].values.assign(source.text.size(), 0.0);
    }
    for (std::size_t r = 0; r < source.text.size(); ++r) {
      const auto it = pos.find(source.text[r]);
      indicators[it == pos.end() ? width - 1 : it->second].values[r] = 1.0;
    }
    auto at = data.columns.erase(data.columns.begin() + static_cast<std::ptrdiff_t>(*idx));
    data.columns.insert(at, std::make_move_iterator(indicators.begin()),
                        std::make_move_iterator(indicators.end()));
  }
  data.log("one_hot", {{"step", to_json(TransformStep(step))}});
}

Dataset one_hot_encode(Dataset data) {
  apply(fit_one_hot(data), data);
  return data;
}

MinMaxStep fit_minmax(const Dataset& data) {
  MinMaxStep step;
  for (const Column& c : data.columns) {
    if (c.kind != FeatureKind::kContinuous) continue;
    const auto v = finite_values(c.values);
    MinMaxStep::Range range{c.name, 0.0, 0.0};
    if (!v.empty()) {
      const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
      range.min = *lo;
      range.max = *hi;
    }
    step.ranges.push_back(range);
  }
  return step;
}

void apply(const MinMaxStep& step, Dataset& data) {
  for (const auto& range : step.ranges) {
    const auto idx = data.column_index(range.column);
    if (!idx) throw DataError("transform expects column '" + range.column + "' which is absent");
    const double span = range.max - range.min;
    for (double& x : data.columns[*idx].values) {
      if (std::isnan(x)) continue;
      x = span > 0.0 ? std::clamp((x - range.min) / span, 0.0, 1.0) : 0.0;
    }
  }
  data.log("minmax", {{"step", to_json(TransformStep(step))}});
}

std::pair<Dataset, MinMaxStep> minmax_scale(Dataset data) {
  MinMaxStep step = fit_minmax(data);
  apply(step, data);
  return {std::move(data), std::move(step)};
}

// --- statistics and selection -----------------------------------------------

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

namespace {

double pearson(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace

double correlation(std::span<const double> x, std::span<const double> y,
                   CorrelationKind kind) {
  if (x.size() != y.size()) {
    throw ShapeError("correlation: lengths " + std::to_string(x.size()) + " and " +
                     std::to_string(y.size()) + " differ");
  }
  if (x.size() < 2) throw ShapeError("correlation: need at least 2 values");
  if (kind == CorrelationKind::kPearson) return pearson(x, y);
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

std::vector<int> equal_frequency_bins(std::span<const double> x, int bins) {
  if (bins < 1) throw ConfigError("equal_frequency_bins: bins must be positive");
  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> edges;
  const std::size_t n = sorted.size();
  for (int i = 1; i < bins && n > 0; ++i) {
    const double e = sorted[static_cast<std::size_t>(i) * n / static_cast<std::size_t>(bins)];
    if (edges.empty() || e != edges.back()) edges.push_back(e);
  }
  std::vector<int> out;
  out.reserve(n);
  for (double v : x) {
    out.push_back(static_cast<int>(std::upper_bound(edges.begin(), edges.end(), v) -
                                   edges.begin()));
  }
  return out;
}

double mutual_information(std::span<const double> x, std::span<const int> labels, int bins) {
  if (x.size() != labels.size()) {
    throw ShapeError("mutual_information: " + std::to_string(x.size()) + " values for " +
                     std::to_string(labels.size()) + " labels");
  }
  if (x.empty()) return 0.0;
  for (double v : x) {
    if (!std::isfinite(v)) throw DataError("mutual_information: non-finite feature value");
  }
  const auto bx = equal_frequency_bins(x, bins);
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> px;
  std::map<int, double> py;
  for (std::size_t i = 0; i < x.size(); ++i) {
    joint[{bx[i], labels[i]}] += 1.0;
    px[bx[i]] += 1.0;
    py[labels[i]] += 1.0;
  }
  const double n = static_cast<double>(x.size());
  double mi = 0.0;
  for (const auto& [key, c] : joint) {
    mi += (c / n) * std::log(c * n / (px[key.first] * py[key.second]));
  }
  return std::max(mi, 0.0);
}

std::vector<double> mutual_information_scores(const Dataset& data, int bins) {
  std::vector<double> out;
  out.reserve(data.columns.size());
  for (const Column& c : data.columns) {
    if (c.kind == FeatureKind::kCategorical) {
      throw DataError("mutual_information_scores: column '" + c.name + "' is categorical");
    }
    out.push_back(mutual_information(c.values, data.labels, bins));
  }
  return out;
}

SelectStep fit_prune_collinear(const Dataset& data, double threshold,
                               std::span<const double> mi_scores) {
  if (mi_scores.size() != data.columns.size()) {
    throw ShapeError("prune_collinear: " + std::to_string(mi_scores.size()) +
                     " MI scores for " + std::to_string(data.columns.size()) + " columns");
  }
  SelectStep step;
  step.reason = "prune_collinear";
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < data.columns.size(); ++i) {
    if (data.columns[i].kind == FeatureKind::kContinuous) active.push_back(i);
  }
  if (data.rows() < 2) return step;

  std::map<std::size_t, std::vector<double>> ranks;
  for (std::size_t i : active) ranks[i] = average_ranks(data.columns[i].values);
  std::map<std::pair<std::size_t, std::size_t>, std::pair<double, double>> cache;
  auto coefficients = [&](std::size_t a, std::size_t b) {
    auto it = cache.find({a, b});
    if (it == cache.end()) {
      const double p = pearson(data.columns[a].values, data.columns[b].values);
      const double s = pearson(ranks[a], ranks[b]);
      it = cache.emplace(std::pair{a, b}, std::pair{p, s}).first;
    }
    return it->second;
  };

  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t ai = 0; ai < active.size() && !changed; ++ai) {
      for (std::size_t bi = ai + 1; bi < active.size() && !changed; ++bi) {
        const std::size_t a = active[ai];
        const std::size_t b = active[bi];
        const auto [p, s] = coefficients(a, b);
        if (std::max(std::abs(p), std::abs(s)) <= threshold) continue;
        const std::size_t loser = mi_scores[a] < mi_scores[b] ? a : b;
        const std::size_t keeper = loser == a ? b : a;
        step.dropped.push_back(data.columns[loser].name);
        step.details.push_back({{"dropped", data.columns[loser].name},
                                {"kept", data.columns[keeper].name},
                                {"pearson", p},
                                {"spearman", s}});
        active.erase(std::find(active.begin(), active.end(), loser));
        changed = true;
      }
    }
  }
  return step;
}

SelectStep fit_select_top_k(const Dataset& data, std::span<const double> mi_scores,
                            std::size_t k) {
  if (mi_scores.size() != data.columns.size()) {
    throw ShapeError("select_top_k: " + std::to_string(mi_scores.size()) + " MI scores for " +
                     std::to_string(data.columns.size()) + " columns");
  }
  SelectStep step;
  step.reason = "select_top_k";
  const std::size_t n = data.columns.size();
  if (k >= n) {
    if (k > n) {
      step.warnings.push_back("select_top_k: k=" + std::to_string(k) + " exceeds " +
                              std::to_string(n) + " features; keeping all");
    }
    return step;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return mi_scores[a] > mi_scores[b]; });
  std::vector<bool> keep(n, false);
  for (std::size_t i = 0; i < k; ++i) keep[order[i]] = true;
  for (std::size_t i = 0; i < n; ++i) {
    if (keep[i]) continue;
    step.dropped.push_back(data.columns[i].name);
    step.details.push_back({{"dropped", data.columns[i].name}, {"mi", mi_scores[i]}});
  }
  return step;
}

void apply(const SelectStep& step, Dataset& data) {
  erase_columns(data, step.dropped);
  data.log(step.reason, {{"step", to_json(TransformStep(step))}});
}

Dataset prune_collinear(Dataset data, double threshold, std::span<const double> mi_scores) {
  apply(fit_prune_collinear(data, threshold, mi_scores), data);
  return data;
}

Dataset select_top_k(Dataset data, std::span<const double> mi_scores, std::size_t k) {
  apply(fit_select_top_k(data, mi_scores, k), data);
  return data;
}

// --- partitioning, balancing, windowing -------------------------------------

SplitResult stratified_split(std::span<const int> labels, double train_fraction,
                             std::uint64_t seed, bool allow_small_classes) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("stratified_split: fraction must lie in (0,1)");
  }
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

  struct Quota {
    int label;
    std::size_t base;
    double remainder;
  };
  std::vector<Quota> quotas;
  std::size_t assigned = 0;
  std::size_t eligible = 0;
  SplitResult out;
  for (const auto& [label, rows] : by_class) {
    if (rows.size() < 2) {
      if (!allow_small_classes) {
        throw DataError("stratified_split: class " + std::to_string(label) + " has only " +
                        std::to_string(rows.size()) + " row(s)");
      }
      continue;
    }
    const double exact = train_fraction * static_cast<double>(rows.size());
    const auto base = static_cast<std::size_t>(std::floor(exact + 1e-9));
    quotas.push_back({label, base, exact - static_cast<double>(base)});
    assigned += base;
    eligible += rows.size();
  }
  const auto target =
      static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(eligible) + 1e-9));
  std::vector<std::size_t> order(quotas.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return quotas[a].remainder > quotas[b].remainder;
  });
  for (std::size_t i = 0; i < order.size() && assigned < target; ++i) {
    Quota& q = quotas[order[i]];
    if (q.remainder > 0.0) {
      ++q.base;
      ++assigned;
    }
  }

  Rng rng(seed);
  std::size_t qi = 0;
  for (auto& [label, rows] : by_class) {
    if (rows.size() < 2) {
      out.train.insert(out.train.end(), rows.begin(), rows.end());
      continue;
    }
    rng.shuffle(rows.begin(), rows.end());
    const std::size_t n_train = quotas[qi++].base;
    out.train.insert(out.train.end(), rows.begin(),
                     rows.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.test.insert(out.test.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_train),
                    rows.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

SmoteResult smote(const Dataset& train, const SmoteOptions& options) {
  if (options.k_neighbors < 1) throw ConfigError("smote: k_neighbors must be positive");
  if (!(options.target_ratio >= 0.0)) throw ConfigError("smote: target_ratio must be >= 0");
  SmoteResult result{train, {}, {}};
  Dataset& out = result.data;
  const ag::Matrix x = train.feature_matrix();

  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < train.rows(); ++i) members[train.labels[i]].push_back(i);
  std::size_t majority = 0;
  for (const auto& [label, rows] : members) majority = std::max(majority, rows.size());
  const auto target = static_cast<std::size_t>(
      std::floor(options.target_ratio * static_cast<double>(majority) + 1e-9));

  Rng rng(options.seed);
  for (const auto& [label, rows] : members) {
    if (rows.size() >= target) continue;
    const std::string& name = static_cast<std::size_t>(label) < train.class_names.size()
                                  ? train.class_names[static_cast<std::size_t>(label)]
                                  : std::to_string(label);
    if (rows.size() < 2) {
      result.warnings.push_back("smote: class '" + name + "' has a single sample; skipped");
      continue;
    }
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(options.k_neighbors),
                                                rows.size() - 1);
    std::unordered_map<std::size_t, std::vector<std::size_t>> neighbours;
    auto nearest = [&](std::size_t base) -> const std::vector<std::size_t>& {
      auto it = neighbours.find(base);
      if (it != neighbours.end()) return it->second;
      std::vector<std::pair<double, std::size_t>> d;
      d.reserve(rows.size() - 1);
      for (std::size_t other : rows) {
        if (other == base) continue;
        d.emplace_back((x.row(static_cast<ag::Index>(other)) -
                        x.row(static_cast<ag::Index>(base)))
                           .squaredNorm(),
                       other);
      }
      std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
      std::vector<std::size_t> nn;
      for (std::size_t i = 0; i < k; ++i) nn.push_back(d[i].second);
      return neighbours.emplace(base, std::move(nn)).first->second;
    };

    const std::size_t need = target - rows.size();
    for (std::size_t s = 0; s < need; ++s) {
      const std::size_t base = rows[rng.index(rows.size())];
      const auto& nn = nearest(base);
      const std::size_t other = nn[rng.index(nn.size())];
      const double lambda = rng.uniform_open();
      for (std::size_t j = 0; j < out.columns.size(); ++j) {
        const double a = x(static_cast<ag::Index>(base), static_cast<ag::Index>(j));
        const double b = x(static_cast<ag::Index>(other), static_cast<ag::Index>(j));
        out.columns[j].values.push_back(a + lambda * (b - a));
      }
      out.labels.push_back(label);
      out.source_rows.push_back(train.source_rows[base]);
      out.synthetic.push_back(1);
    }
    result.synthesized[label] = need;
    out.log("smote", {{"class", name},
                      {"synthesized", need},
                      {"k", k},
                      {"target", target},
                      {"seed", options.seed}});
  }
  return result;
}

std::vector<std::size_t> time_order(std::span<const double> timestamps) {
  std::vector<std::size_t> order(timestamps.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return timestamps[a] < timestamps[b];
  });
  return order;
}

WindowSet make_windows(std::span<const std::size_t> ordered_records,
                       std::span<const int> record_labels, std::size_t length,
                       std::size_t stride) {
  if (length == 0 || stride == 0) throw ConfigError("make_windows: length and stride must be positive");
  WindowSet ws;
  ws.length = length;
  ws.stride = stride;
  const std::size_t n = ordered_records.size();
  if (n < length) {
    ws.warnings.push_back("make_windows: " + std::to_string(n) + " records, fewer than T=" +
                          std::to_string(length) + "; no windows");
    return ws;
  }
  const std::size_t count = (n - length) / stride + 1;
  ws.windows.reserve(count);
  for (std::size_t w = 0; w < count; ++w) {
    const std::size_t start = w * stride;
    std::vector<std::size_t> idx(ordered_records.begin() + static_cast<std::ptrdiff_t>(start),
                                 ordered_records.begin() +
                                     static_cast<std::ptrdiff_t>(start + length));
    ws.labels.push_back(record_labels[idx.back()]);
    ws.windows.push_back(std::move(idx));
  }
  return ws;
}

}  // namespace hids
