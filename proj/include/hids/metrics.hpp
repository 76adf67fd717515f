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

// Classification metrics: confusion counts, per-class precision / recall /
// F1, one-vs-rest ROC AUC, and the text report.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hids/autograd.hpp"

namespace hids {

struct ConfusionMatrix {
  std::vector<std::string> classes;
  // counts[t][p]: windows of true class t predicted as p.
  std::vector<std::vector<std::uint64_t>> counts;

  std::size_t size() const { return counts.size(); }
  std::uint64_t total() const;
  std::uint64_t trace() const;
  std::uint64_t support(std::size_t c) const;    // row sum
  std::uint64_t predicted(std::size_t c) const;  // column sum
};

/// Throws ShapeError on a length mismatch and DataError on a label outside
/// [0, classes). Missing class names default to the class index.
ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted,
                          std::size_t classes, std::vector<std::string> names = {});

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  // Set when any of the three had a zero denominator and was reported as 0.
  bool undefined = false;
};

ClassScores prf1(const ConfusionMatrix& m, std::size_t c);

/// Harmonic mean 2PR/(P+R); 0 when P+R is 0.
double harmonic_f1(double precision, double recall);

/// Area under the ROC curve of `scores` for the positive set, by the rank
/// statistic: average ranks over all scores, ties counting one half. Returns
/// nullopt without at least one positive and one negative.
std::optional<double> rank_auc(std::span<const double> scores, std::span<const std::uint8_t> positive);

/// One-vs-rest AUC of column `c` of an N x C score matrix.
std::optional<double> roc_auc_ovr(const ag::Matrix& scores, std::span<const int> truth,
                                  std::size_t c);

struct MacroAuc {
  double value = 0.0;  // NaN when no class has a defined AUC
  std::size_t classes_used = 0;
  std::vector<std::string> warnings;
};

/// Mean of the defined one-vs-rest AUCs; excluded classes produce warnings.
MacroAuc macro_auc(const ag::Matrix& scores, std::span<const int> truth,
                   const std::vector<std::string>& class_names);

/// Mean F1 over classes that occur in the truth or the predictions.
double macro_f1(const ConfusionMatrix& m);

struct MetricsReport {
  std::vector<std::string> classes;
  double accuracy = 0.0;
  std::vector<ClassScores> per_class;
  std::vector<std::optional<double>> per_class_auc;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  double macro_auc = 0.0;
  // Share of true "Normal" windows predicted as any other class; NaN when
  // there is no Normal class or no Normal window.
  double false_positive_rate = 0.0;
  ConfusionMatrix confusion;
  std::vector<std::string> warnings;
};

/// Argmax of each row; ties go to the lowest index.
std::vector<int> argmax_rows(const ag::Matrix& scores);

/// All metrics from an N x C probability matrix and true labels.
MetricsReport compute_metrics(const ag::Matrix& probabilities, std::span<const int> truth,
                              const std::vector<std::string>& class_names);

/// Human-readable table, then a `[metrics]` section of key=value lines and a
/// `[confusion]` section (rows = true class).
std::string to_text(const MetricsReport& report);
void save_report(const std::filesystem::path& path, const MetricsReport& report);

/// Key=value pairs of the `[metrics]` section of a report.
std::map<std::string, double> parse_report_values(std::string_view text);
/// The `[confusion]` section of a report.
ConfusionMatrix parse_report_confusion(std::string_view text);

}  // namespace hids
