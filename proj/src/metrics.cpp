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

#include "hids/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "hids/error.hpp"
#include "hids/preprocess.hpp"

namespace hids {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string pct(double v) {
  if (std::isnan(v)) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string_view section(std::string_view text, std::string_view name) {
  const std::string tag = "[" + std::string(name) + "]\n";
  const auto start = text.find(tag);
  if (start == std::string_view::npos) {
    throw FormatError("report: missing " + std::string(tag.substr(0, tag.size() - 1)) + " section");
  }
  std::string_view rest = text.substr(start + tag.size());
  const auto end = rest.find("\n[");
  return end == std::string_view::npos ? rest : rest.substr(0, end + 1);
}

}  // namespace

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t n = 0;
  for (const auto& row : counts) n = std::accumulate(row.begin(), row.end(), n);
  return n;
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t n = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) n += counts[i][i];
  return n;
}

std::uint64_t ConfusionMatrix::support(std::size_t c) const {
  return std::accumulate(counts.at(c).begin(), counts.at(c).end(), std::uint64_t{0});
}

std::uint64_t ConfusionMatrix::predicted(std::size_t c) const {
  std::uint64_t n = 0;
  for (const auto& row : counts) n += row.at(c);
  return n;
}

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted,
                          std::size_t classes, std::vector<std::string> names) {
  if (truth.size() != predicted.size()) {
    throw ShapeError("confusion: " + std::to_string(truth.size()) + " labels vs " +
                     std::to_string(predicted.size()) + " predictions");
  }
  ConfusionMatrix m;
  m.classes = std::move(names);
  for (std::size_t c = m.classes.size(); c < classes; ++c) m.classes.push_back(std::to_string(c));
  m.classes.resize(classes);
  m.counts.assign(classes, std::vector<std::uint64_t>(classes, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i];
    const int p = predicted[i];
    if (t < 0 || static_cast<std::size_t>(t) >= classes || p < 0 ||
        static_cast<std::size_t>(p) >= classes) {
      throw DataError("confusion: label out of range at position " + std::to_string(i));
    }
    ++m.counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
  }
  return m;
}

double harmonic_f1(double precision, double recall) {
  const double s = precision + recall;
  return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

ClassScores prf1(const ConfusionMatrix& m, std::size_t c) {
  const auto tp = static_cast<double>(m.counts.at(c).at(c));
  const auto pred = static_cast<double>(m.predicted(c));
  const auto sup = static_cast<double>(m.support(c));
  ClassScores s;
  if (pred > 0.0) s.precision = tp / pred;
  if (sup > 0.0) s.recall = tp / sup;
  s.f1 = harmonic_f1(s.precision, s.recall);
  s.undefined = pred == 0.0 || sup == 0.0 || s.precision + s.recall == 0.0;
  return s;
}

std::optional<double> rank_auc(std::span<const double> scores,
                               std::span<const std::uint8_t> positive) {
  if (scores.size() != positive.size()) {
    throw ShapeError("rank_auc: " + std::to_string(scores.size()) + " scores vs " +
                     std::to_string(positive.size()) + " flags");
  }
  const auto ranks = average_ranks(scores);
  double n_pos = 0.0;
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (positive[i]) {
      n_pos += 1.0;
      rank_sum += ranks[i];
    }
  }
  const double n_neg = static_cast<double>(scores.size()) - n_pos;
  if (n_pos == 0.0 || n_neg == 0.0) return std::nullopt;
  // Mann-Whitney U: positive-over-negative pairs, ties counted as one half.
  const double u = rank_sum - n_pos * (n_pos + 1.0) / 2.0;
  return u / (n_pos * n_neg);
}

std::optional<double> roc_auc_ovr(const ag::Matrix& scores, std::span<const int> truth,
                                  std::size_t c) {
  if (static_cast<std::size_t>(scores.rows()) != truth.size()) {
    throw ShapeError("roc_auc_ovr: " + std::to_string(scores.rows()) + " score rows vs " +
                     std::to_string(truth.size()) + " labels");
  }
  if (c >= static_cast<std::size_t>(scores.cols())) {
    throw ShapeError("roc_auc_ovr: class " + std::to_string(c) + " has no score column");
  }
  std::vector<double> col(truth.size());
  std::vector<std::uint8_t> pos(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    col[i] = scores(static_cast<ag::Index>(i), static_cast<ag::Index>(c));
    pos[i] = truth[i] == static_cast<int>(c) ? 1 : 0;
  }
  return rank_auc(col, pos);
}

MacroAuc macro_auc(const ag::Matrix& scores, std::span<const int> truth,
                   const std::vector<std::string>& class_names) {
  MacroAuc out;
  double sum = 0.0;
  for (std::size_t c = 0; c < static_cast<std::size_t>(scores.cols()); ++c) {
    const auto auc = roc_auc_ovr(scores, truth, c);
    if (!auc) {
      const std::string name = c < class_names.size() ? class_names[c] : std::to_string(c);
      out.warnings.push_back("AUC undefined for class '" + name +
                             "' (no positives or no negatives); excluded from the macro mean");
      continue;
    }
    sum += *auc;
    ++out.classes_used;
  }
  out.value = out.classes_used > 0 ? sum / static_cast<double>(out.classes_used) : kNaN;
  return out;
}

double macro_f1(const ConfusionMatrix& m) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t c = 0; c < m.size(); ++c) {
    if (m.support(c) == 0 && m.predicted(c) == 0) continue;
    sum += prf1(m, c).f1;
    ++n;
  }
  return n > 0 ? sum / static_cast<double>(n) : 0.0;
}

std::vector<int> argmax_rows(const ag::Matrix& scores) {
  std::vector<int> out(static_cast<std::size_t>(scores.rows()));
  for (ag::Index i = 0; i < scores.rows(); ++i) {
    ag::Index best = 0;
    for (ag::Index j = 1; j < scores.cols(); ++j) {
      if (scores(i, j) > scores(i, best)) best = j;
    }
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

MetricsReport compute_metrics(const ag::Matrix& probabilities, std::span<const int> truth,
                              const std::vector<std::string>& class_names) {
  const auto classes = static_cast<std::size_t>(probabilities.cols());
  if (class_names.size() != classes) {
    throw ShapeError("compute_metrics: " + std::to_string(classes) + " score columns for " +
                     std::to_string(class_names.size()) + " class names");
  }
  MetricsReport r;
  r.classes = class_names;
  r.confusion = confusion(truth, argmax_rows(probabilities), classes, class_names);
  const double total = static_cast<double>(r.confusion.total());
  r.accuracy = total > 0.0 ? static_cast<double>(r.confusion.trace()) / total : 0.0;

  std::size_t counted = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    r.per_class.push_back(prf1(r.confusion, c));
    r.per_class_auc.push_back(truth.empty() ? std::nullopt
                                            : roc_auc_ovr(probabilities, truth, c));
    if (r.confusion.support(c) == 0 && r.confusion.predicted(c) == 0) continue;
    r.macro_precision += r.per_class.back().precision;
    r.macro_recall += r.per_class.back().recall;
    ++counted;
  }
  if (counted > 0) {
    r.macro_precision /= static_cast<double>(counted);
    r.macro_recall /= static_cast<double>(counted);
  }
  r.macro_f1 = macro_f1(r.confusion);
  auto auc = macro_auc(probabilities, truth, class_names);
  r.macro_auc = auc.value;
  r.warnings = std::move(auc.warnings);

  r.false_positive_rate = kNaN;
  const auto normal = std::find(class_names.begin(), class_names.end(), "Normal");
  if (normal == class_names.end()) {
    r.warnings.push_back("no 'Normal' class; false-positive rate undefined");
  } else {
    const auto n = static_cast<std::size_t>(normal - class_names.begin());
    const auto sup = r.confusion.support(n);
    if (sup > 0) {
      r.false_positive_rate =
          static_cast<double>(sup - r.confusion.counts[n][n]) / static_cast<double>(sup);
    }
  }
  return r;
}

std::string to_text(const MetricsReport& r) {
  std::ostringstream out;
  std::size_t width = 9;
  for (const auto& c : r.classes) width = std::max(width, c.size());
  auto pad = [&](const std::string& s) { return s + std::string(width + 2 - s.size(), ' '); };
  out << "# hids metrics report\n";
  out << pad("Class") << "Precision  Recall     F1-Score   Support\n";
  for (std::size_t c = 0; c < r.classes.size(); ++c) {
    const auto& s = r.per_class[c];
    char line[128];
    std::snprintf(line, sizeof line, "%-9s  %-9s  %-9s  %llu%s\n", pct(s.precision).c_str(),
                  pct(s.recall).c_str(), pct(s.f1).c_str(),
                  static_cast<unsigned long long>(r.confusion.support(c)),
                  s.undefined ? "  (undefined terms reported as 0)" : "");
    out << pad(r.classes[c]) << line;
  }
  char line[128];
  std::snprintf(line, sizeof line, "%-9s  %-9s  %-9s  %llu\n", pct(r.macro_precision).c_str(),
                pct(r.macro_recall).c_str(), pct(r.macro_f1).c_str(),
                static_cast<unsigned long long>(r.confusion.total()));
  out << pad("Macro avg") << line;
  out << "Accuracy: " << pct(r.accuracy) << '\n';
  out << "AUC-ROC (macro one-vs-rest): " << pct(r.macro_auc) << '\n';
  out << "False-positive rate (Normal): " << pct(r.false_positive_rate) << '\n';
  for (const auto& w : r.warnings) out << "# warning: " << w << '\n';

  out << "\n[metrics]\n";
  out << "accuracy=" << num(r.accuracy) << '\n';
  out << "macro_precision=" << num(r.macro_precision) << '\n';
  out << "macro_recall=" << num(r.macro_recall) << '\n';
  out << "macro_f1=" << num(r.macro_f1) << '\n';
  out << "macro_auc=" << num(r.macro_auc) << '\n';
  out << "false_positive_rate=" << num(r.false_positive_rate) << '\n';
  for (std::size_t c = 0; c < r.classes.size(); ++c) {
    const std::string key = "class." + r.classes[c] + ".";
    out << key << "precision=" << num(r.per_class[c].precision) << '\n';
    out << key << "recall=" << num(r.per_class[c].recall) << '\n';
    out << key << "f1=" << num(r.per_class[c].f1) << '\n';
    out << key << "auc=" << num(r.per_class_auc[c].value_or(kNaN)) << '\n';
    out << key << "support=" << r.confusion.support(c) << '\n';
  }
  out << "\n[confusion]\n";
  out << "classes=";
  for (std::size_t c = 0; c < r.classes.size(); ++c) out << (c ? "," : "") << r.classes[c];
  out << '\n';
  for (const auto& row : r.confusion.counts) {
    for (std::size_t j = 0; j < row.size(); ++j) out << (j ? " " : "") << row[j];
    out << '\n';
  }
  return out.str();
}

void save_report(const std::filesystem::path& path, const MetricsReport& report) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << to_text(report);
}

std::map<std::string, double> parse_report_values(std::string_view text) {
  std::map<std::string, double> out;
  std::istringstream in{std::string(section(text, "metrics"))};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("report: bad metrics line '" + line + "'");
    const std::string value = line.substr(eq + 1);
    out[line.substr(0, eq)] = value == "nan" ? kNaN : std::stod(value);
  }
  return out;
}

ConfusionMatrix parse_report_confusion(std::string_view text) {
  std::istringstream in{std::string(section(text, "confusion"))};
  std::string line;
  ConfusionMatrix m;
  if (!std::getline(in, line) || !line.starts_with("classes=")) {
    throw FormatError("report: confusion section lacks a classes line");
  }
  std::istringstream names(line.substr(8));
  std::string name;
  while (std::getline(names, name, ',')) m.classes.push_back(name);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::vector<std::uint64_t> counts;
    std::uint64_t v = 0;
    while (row >> v) counts.push_back(v);
    if (counts.size() != m.classes.size()) throw FormatError("report: ragged confusion row");
    m.counts.push_back(std::move(counts));
  }
  if (m.counts.size() != m.classes.size()) throw FormatError("report: confusion is not square");
  return m;
}

}  // namespace hids
