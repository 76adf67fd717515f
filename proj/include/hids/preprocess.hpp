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

// Tabular cleaning, encoding, selection, balancing and windowing.
//
// Every statistic is fitted on training rows only. Each fitted stage is a
// TransformStep that can be replayed on another Dataset with identical
// results; a Transform is the ordered list of those steps.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "hids/autograd.hpp"
#include "hids/schema.hpp"

namespace hids {

enum class FeatureKind { kContinuous, kCategorical, kIndicator };

struct Column {
  std::string name;
  FeatureKind kind = FeatureKind::kContinuous;
  std::vector<double> values;     // continuous and indicator; NaN = missing
  std::vector<std::string> text;  // categorical; empty = missing

  std::size_t size() const;
  bool missing(std::size_t row) const;
  double missing_fraction() const;
};

struct Dataset {
  std::vector<Column> columns;
  std::vector<int> labels;
  std::vector<std::string> class_names;
  // Index of the record each row came from; synthetic rows point at the
  // record they were interpolated from.
  std::vector<std::size_t> source_rows;
  std::vector<std::uint8_t> synthetic;
  // Append-only list of applied operations with their parameters.
  nlohmann::json provenance = nlohmann::json::array();

  std::size_t rows() const { return labels.size(); }
  std::vector<std::string> feature_names() const;
  std::optional<std::size_t> column_index(std::string_view name) const;
  /// Row-major rows x features; throws DataError while categorical columns or
  /// missing cells remain.
  ag::Matrix feature_matrix() const;
  Dataset subset(std::span<const std::size_t> rows) const;
  void log(std::string op, nlohmann::json params);
};

/// Tabular view of records: continuous and categorical schema columns in
/// schema order; labels indexed into `class_names`.
Dataset make_dataset(std::span<const FlowRecord> records, const SchemaSpec& schema,
                     const std::vector<std::string>& class_names);

struct DedupResult {
  std::vector<FlowRecord> records;
  std::size_t removed = 0;
};

/// Drops rows whose raw cells equal an earlier row's, keeping the first.
DedupResult deduplicate(std::vector<FlowRecord> records);

// --- imputation -------------------------------------------------------------

enum class ImputePolicy { kAuto, kMean, kMedian, kMode };

struct ImputeOptions {
  double max_missing_fraction = 0.30;
  double skew_threshold = 1.0;
  std::map<std::string, ImputePolicy> policies;  // per-column override
};

struct ImputeStep {
  struct Fill {
    std::string column;
    std::string method;  // mean | median | mode
    double value = 0.0;
    std::string category;
  };
  std::vector<std::string> dropped;
  std::vector<Fill> fills;
  std::vector<std::string> warnings;
};

/// Sample skewness (bias-corrected Fisher-Pearson) of the finite entries.
double sample_skewness(std::span<const double> values);
double median(std::vector<double> values);

ImputeStep fit_impute(const Dataset& data, const ImputeOptions& options = {});
void apply(const ImputeStep& step, Dataset& data);
Dataset impute_missing(Dataset data, const ImputeOptions& options = {});

// --- encoding and scaling ---------------------------------------------------

inline constexpr std::string_view kUnseenCategory = "<unseen>";

struct OneHotStep {
  struct Encoding {
    std::string column;
    std::vector<std::string> vocabulary;  // training categories, first-seen order
  };
  std::vector<Encoding> encodings;
};

/// Replaces each categorical column by one indicator per training category
/// plus an `<unseen>` indicator, inserted where the categorical column was.
OneHotStep fit_one_hot(const Dataset& data);
void apply(const OneHotStep& step, Dataset& data);
Dataset one_hot_encode(Dataset data);

struct MinMaxStep {
  struct Range {
    std::string column;
    double min = 0.0;
    double max = 0.0;
  };
  std::vector<Range> ranges;
};

/// Continuous columns only; constant columns map to 0 and out-of-range values
/// clamp to [0,1].
MinMaxStep fit_minmax(const Dataset& data);
void apply(const MinMaxStep& step, Dataset& data);
std::pair<Dataset, MinMaxStep> minmax_scale(Dataset data);

// --- statistics and selection -----------------------------------------------

enum class CorrelationKind { kPearson, kSpearman };

/// Sample Pearson coefficient, or Pearson of average-tied ranks. A constant
/// input yields 0. Throws ShapeError on length mismatch or fewer than 2 values.
double correlation(std::span<const double> x, std::span<const double> y,
                   CorrelationKind kind);
std::vector<double> average_ranks(std::span<const double> x);

/// Plug-in mutual information in nats after discretizing `x` into at most
/// `bins` equal-frequency bins (ties share a bin).
double mutual_information(std::span<const double> x, std::span<const int> labels,
                          int bins = 10);
std::vector<int> equal_frequency_bins(std::span<const double> x, int bins);
std::vector<double> mutual_information_scores(const Dataset& data, int bins = 10);

struct SelectStep {
  std::string reason;  // prune_collinear | select_top_k
  std::vector<std::string> dropped;
  nlohmann::json details = nlohmann::json::array();
  std::vector<std::string> warnings;
};

/// Among continuous columns, repeatedly drops the lower-MI member of the
/// first pair (schema order) whose max(|pearson|, |spearman|) exceeds
/// `threshold`; MI ties drop the later column.
SelectStep fit_prune_collinear(const Dataset& data, double threshold,
                               std::span<const double> mi_scores);
/// Keeps the `k` highest-MI columns (ties by position), preserving order.
SelectStep fit_select_top_k(const Dataset& data, std::span<const double> mi_scores,
                            std::size_t k);
void apply(const SelectStep& step, Dataset& data);
Dataset prune_collinear(Dataset data, double threshold, std::span<const double> mi_scores);
Dataset select_top_k(Dataset data, std::span<const double> mi_scores, std::size_t k);

// --- transform --------------------------------------------------------------

using TransformStep = std::variant<ImputeStep, OneHotStep, MinMaxStep, SelectStep>;

void apply(const TransformStep& step, Dataset& data);
nlohmann::json to_json(const TransformStep& step);
TransformStep step_from_json(const nlohmann::json& j);

struct PreprocessOptions {
  ImputeOptions impute;
  double collinearity_threshold = 0.85;
  int mi_bins = 10;
  std::size_t top_k = 35;
};

struct Transform {
  static constexpr std::string_view kFormat = "hids-transform/1";

  std::vector<std::string> class_names;
  std::vector<TransformStep> steps;

  void apply(Dataset& data) const;
  nlohmann::json to_json() const;
  static Transform from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static Transform load(const std::filesystem::path& path);
  /// Rebuilds the replayable steps recorded in a dataset's provenance log.
  static Transform from_provenance(const nlohmann::json& log,
                                   std::vector<std::string> class_names);
};

/// Fits impute -> one-hot -> min-max -> MI -> collinearity pruning -> top-k on
/// `train`, applying each stage to it as it goes.
Transform fit_transform(Dataset& train, const PreprocessOptions& options = {});

// --- partitioning, balancing, windowing -------------------------------------

struct SplitResult {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Per-class shuffled split. Class c receives floor(f * n_c) training rows;
/// the rows left over from flooring are handed out one per class, largest
/// fractional part first (ties to the lower class index), until the training
/// total equals floor(f * n). Throws DataError for a class with fewer than 2
/// rows unless `allow_small_classes`, in which case such rows go to training.
SplitResult stratified_split(std::span<const int> labels, double train_fraction,
                             std::uint64_t seed, bool allow_small_classes = false);

struct SmoteOptions {
  int k_neighbors = 5;
  double target_ratio = 0.5;
  std::uint64_t seed = 1;
};

struct SmoteResult {
  Dataset data;
  std::map<int, std::size_t> synthesized;
  std::vector<std::string> warnings;
};

/// Tops up each class below floor(target_ratio * majority) with points
/// x + lambda * (x_nn - x), lambda ~ U(0,1), x_nn one of the k nearest
/// same-class neighbours of a randomly chosen member x. Synthetic rows are
/// appended after the originals and flagged.
SmoteResult smote(const Dataset& train, const SmoteOptions& options = {});

struct WindowSet {
  std::size_t length = 50;
  std::size_t stride = 5;
  std::vector<std::vector<std::size_t>> windows;  // record indices, time order
  std::vector<int> labels;                        // label of each window's last event
  std::vector<std::string> warnings;

  std::size_t size() const { return windows.size(); }
};

/// Stable order of indices by timestamp.
std::vector<std::size_t> time_order(std::span<const double> timestamps);

/// Window i covers ordered events [i*stride, i*stride + length).
WindowSet make_windows(std::span<const std::size_t> ordered_records,
                       std::span<const int> record_labels, std::size_t length = 50,
                       std::size_t stride = 5);

}  // namespace hids
