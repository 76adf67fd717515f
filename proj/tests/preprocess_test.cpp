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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include "hids/csv.hpp"
#include "hids/error.hpp"
#include "hids/preprocess.hpp"
#include "hids/random.hpp"
#include "hids/schema.hpp"
#include "support.hpp"

namespace hids {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Column cont(std::string name, std::vector<double> v) {
  return Column{std::move(name), FeatureKind::kContinuous, std::move(v), {}};
}

Column cat(std::string name, std::vector<std::string> t) {
  return Column{std::move(name), FeatureKind::kCategorical, {}, std::move(t)};
}

Dataset make(std::vector<Column> columns, std::vector<int> labels,
             std::vector<std::string> classes = {"a", "b", "c"}) {
  Dataset d;
  d.columns = std::move(columns);
  d.labels = std::move(labels);
  d.class_names = std::move(classes);
  d.source_rows.resize(d.labels.size());
  std::iota(d.source_rows.begin(), d.source_rows.end(), 0);
  d.synthetic.assign(d.labels.size(), 0);
  return d;
}

const char* kSchema =
    "# six columns\n"
    "ts timestamp\n"
    "src src_entity\n"
    "dst dst_entity\n"
    "proto categorical\n"
    "dur continuous\n"
    "label label Normal,ddos\n";

// --- csv and schema -----------------------------------------------------------

TEST(Csv, QuotedFieldsAndLineEnds) {
  const auto rows = csv::parse("\xEF\xBB\xBF" "a,\"b,c\",\"say \"\"hi\"\"\"\r\n\r\n1,\"x\ny\",\n");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0], (csv::Row{"a", "b,c", "say \"hi\""}));
  EXPECT_EQ(rows[1], (csv::Row{"1", "x\ny", ""}));
  EXPECT_EQ(csv::escape("p,q"), "\"p,q\"");
  EXPECT_EQ(csv::escape("plain"), "plain");
}

TEST(Schema, ParsesKindsAndClasses) {
  const SchemaSpec s = SchemaSpec::parse(kSchema);
  ASSERT_EQ(s.columns.size(), 6u);
  EXPECT_EQ(s.columns[3].kind, ColumnKind::kCategorical);
  EXPECT_EQ(s.classes, (std::vector<std::string>{"Normal", "ddos"}));
  EXPECT_EQ(s.label_column(), 5u);
  EXPECT_EQ(SchemaSpec::parse(s.to_text()).names(), s.names());
}

TEST(Schema, RejectsInvalidLayouts) {
  EXPECT_THROW(SchemaSpec::parse("a timestamp\nb src_entity\nc dst_entity\n").validate(),
               DataError);
  EXPECT_THROW(SchemaSpec::parse("a timestamp\nb src_entity\nb dst_entity\nl label\n").validate(),
               DataError);
  EXPECT_THROW(SchemaSpec::parse("a sometimes\n"), DataError);
}

TEST(ParseFlowCsv, ThreeRowFixture) {
  const SchemaSpec s = SchemaSpec::parse(kSchema);
  const auto records = parse_flow_csv_text(
      "ts,src,dst,proto,dur,label\n"
      "1.5,10.0.0.1,10.0.0.2,tcp,0.25,Normal\n"
      "2.0,10.0.0.3,10.0.0.2,udp,,ddos\n"
      "3.0,10.0.0.1,10.0.0.4,tcp,abc,Normal\n",
      s);
  ASSERT_EQ(records.size(), 3u);
  EXPECT_EQ(records[0].label, "Normal");
  EXPECT_EQ(records[1].label, "ddos");
  EXPECT_EQ(records[0].src, "10.0.0.1");
  EXPECT_DOUBLE_EQ(records[0].timestamp, 1.5);
  ASSERT_TRUE(records[0].continuous[0].has_value());
  EXPECT_DOUBLE_EQ(*records[0].continuous[0], 0.25);
  EXPECT_FALSE(records[1].continuous[0].has_value());  // empty cell
  EXPECT_FALSE(records[2].continuous[0].has_value());  // unparseable cell
  EXPECT_EQ(records[1].categorical[0], "udp");
}

TEST(ParseFlowCsv, HeaderMismatchAndEmptyFile) {
  const SchemaSpec s = SchemaSpec::parse(kSchema);
  try {
    parse_flow_csv_text("src,ts,dst,proto,dur,label\n1,2,3,tcp,1,Normal\n", s);
    FAIL() << "expected a schema mismatch";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("src"), std::string::npos);
  }
  EXPECT_THROW(parse_flow_csv_text("", s), DataError);
  EXPECT_THROW(parse_flow_csv_text("ts,src,dst,proto,dur,label\n1,a,b,tcp,1,worm\n", s),
               DataError);
}

TEST(ParseFlowCsv, EntityColumnsAreJoined) {
  const SchemaSpec s = SchemaSpec::parse(
      "t timestamp\nsip src_entity\ndip dst_entity\ndport dst_entity\ny label\n");
  const auto r = parse_flow_csv_text("t,sip,dip,dport,y\n0,1.1.1.1,2.2.2.2,80,Normal\n", s);
  EXPECT_EQ(r[0].dst, "2.2.2.2:80");
}

// --- deduplication ---------------------------------------------------------------

TEST(Deduplicate, ByteIdenticalRows) {
  const SchemaSpec s = SchemaSpec::parse(kSchema);
  auto r = parse_flow_csv_text(
      "ts,src,dst,proto,dur,label\n1,a,b,tcp,1,Normal\n1,a,b,tcp,1,Normal\n2,a,b,tcp,1,Normal\n",
      s);
  const auto d = deduplicate(r);
  EXPECT_EQ(d.removed, 1u);
  ASSERT_EQ(d.records.size(), 2u);
  EXPECT_DOUBLE_EQ(d.records[1].timestamp, 2.0);  // differs only in timestamp: kept
}

TEST(Deduplicate, PlantedDuplicates) {
  const SchemaSpec s = SchemaSpec::parse(kSchema);
  Rng rng(5);
  std::string text = "ts,src,dst,proto,dur,label\n";
  std::vector<std::string> rows;
  for (int i = 0; i < 93; ++i) {
    rows.push_back(std::to_string(i) + ",h" + std::to_string(rng.index(5)) + ",s,tcp," +
                   std::to_string(rng.uniform()) + ",Normal");
  }
  for (int k = 0; k < 7; ++k) rows.push_back(rows[rng.index(93)]);
  for (const auto& r : rows) text += r + "\n";
  const auto d = deduplicate(parse_flow_csv_text(text, s));
  EXPECT_EQ(d.removed, 7u);
  EXPECT_EQ(d.records.size(), 93u);
}

// --- imputation ------------------------------------------------------------------

TEST(Impute, MeanFillsTheGap) {
  ImputeOptions o;
  o.max_missing_fraction = 0.5;  // one missing cell out of three exceeds the default 30%
  o.policies["x"] = ImputePolicy::kMean;
  const Dataset d = impute_missing(make({cont("x", {1.0, kNaN, 3.0})}, {0, 0, 1}), o);
  EXPECT_EQ(d.columns[0].values, (std::vector<double>{1.0, 2.0, 3.0}));
}

TEST(Impute, DefaultThresholdDropsAColumnOneThirdMissing) {
  const Dataset d = impute_missing(make({cont("x", {1.0, kNaN, 3.0})}, {0, 0, 1}));
  EXPECT_TRUE(d.columns.empty());
}

TEST(Impute, FortyPercentMissingIsDroppedAndLogged) {
  const Dataset d = impute_missing(make({cont("x", {1, kNaN, 3, kNaN, 5}), cont("y", {1, 2, 3, 4, 5})},
                                        {0, 1, 0, 1, 0}));
  ASSERT_EQ(d.columns.size(), 1u);
  EXPECT_EQ(d.columns[0].name, "y");
  ASSERT_FALSE(d.provenance.empty());
  const auto& last = d.provenance.back();
  EXPECT_EQ(last["op"], "impute");
  EXPECT_EQ(last["step"]["dropped"][0], "x");
}

TEST(Impute, EntirelyMissingColumnWarns) {
  const ImputeStep s = fit_impute(make({cont("x", {kNaN, kNaN})}, {0, 1}));
  EXPECT_EQ(s.dropped, (std::vector<std::string>{"x"}));
  EXPECT_EQ(s.warnings.size(), 1u);
}

TEST(Impute, SkewedColumnRoutesToMedian) {
  // Exponential-like sample; skewness computed here from the definition.
  std::vector<double> v = {0.1, 0.2, 0.2, 0.3, 0.4, 0.5, 0.7, 0.9, 1.2, 1.6, 2.5, 4.0, 9.0};
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double m2 = 0, m3 = 0;
  for (double x : v) {
    m2 += std::pow(x - mean, 2) / n;
    m3 += std::pow(x - mean, 3) / n;
  }
  const double skew = m3 / std::pow(m2, 1.5) * std::sqrt(n * (n - 1)) / (n - 2);
  ASSERT_GT(skew, 1.0);
  EXPECT_NEAR(sample_skewness(v), skew, 1e-12);
  std::vector<double> with_gap = v;
  with_gap.push_back(kNaN);
  const ImputeStep s = fit_impute(make({cont("x", with_gap)}, std::vector<int>(with_gap.size(), 0)));
  ASSERT_EQ(s.fills.size(), 1u);
  EXPECT_EQ(s.fills[0].method, "median");
  EXPECT_DOUBLE_EQ(s.fills[0].value, 0.7);
}

TEST(Impute, SymmetricColumnRoutesToMeanAndCategoricalToMode) {
  const ImputeStep s = fit_impute(make({cont("x", {1, 2, 3, 4, 5, 6, kNaN, 7, 8, 9}),
                                        cat("p", {"tcp", "udp", "udp", "", "tcp", "udp", "icmp",
                                                  "tcp", "udp", "tcp"})},
                                       std::vector<int>(10, 0)));
  ASSERT_EQ(s.fills.size(), 2u);
  EXPECT_EQ(s.fills[0].method, "mean");
  EXPECT_DOUBLE_EQ(s.fills[0].value, 5.0);
  EXPECT_EQ(s.fills[1].method, "mode");
  EXPECT_EQ(s.fills[1].category, "tcp");  // tie with udp breaks lexicographically
}

// --- one-hot ----------------------------------------------------------------------

TEST(OneHot, IndicatorsPlusUnseen) {
  const Dataset d = one_hot_encode(make({cat("protocol", {"tcp", "udp", "icmp"})}, {0, 1, 0}));
  ASSERT_EQ(d.columns.size(), 4u);
  EXPECT_EQ(d.columns[3].name, "protocol=<unseen>");
  std::vector<double> row;
  for (const auto& c : d.columns) row.push_back(c.values[1]);
  EXPECT_EQ(row, (std::vector<double>{0, 1, 0, 0}));
}

TEST(OneHot, UnseenTestValue) {
  const Dataset train = make({cat("protocol", {"tcp", "udp", "icmp"})}, {0, 1, 0});
  const OneHotStep step = fit_one_hot(train);
  Dataset test = make({cat("protocol", {"sctp", "udp"})}, {0, 1});
  apply(step, test);
  EXPECT_EQ(test.columns[3].values, (std::vector<double>{1, 0}));
  EXPECT_EQ(test.columns[1].values, (std::vector<double>{0, 1}));
}

TEST(OneHot, ArgmaxRoundTrip) {
  Rng rng(3);
  const std::vector<std::string> vocab = {"http", "dns", "ssh", "ftp", "-"};
  std::vector<std::string> col;
  for (int i = 0; i < 200; ++i) col.push_back(vocab[rng.index(vocab.size())]);
  const Dataset d = one_hot_encode(make({cat("service", col)}, std::vector<int>(col.size(), 0)));
  for (std::size_t r = 0; r < col.size(); ++r) {
    std::size_t hot = 0, ones = 0;
    for (std::size_t c = 0; c < d.columns.size(); ++c) {
      if (d.columns[c].values[r] == 1.0) {
        hot = c;
        ++ones;
      }
    }
    ASSERT_EQ(ones, 1u);
    EXPECT_EQ(d.columns[hot].name, "service=" + col[r]);
  }
}

// --- scaling ----------------------------------------------------------------------

TEST(MinMax, ScalesConstantAndClamps) {
  auto [d, step] = minmax_scale(make({cont("x", {2, 4, 6}), cont("k", {5, 5, 5})}, {0, 1, 0}));
  EXPECT_EQ(d.columns[0].values, (std::vector<double>{0, 0.5, 1}));
  EXPECT_EQ(d.columns[1].values, (std::vector<double>{0, 0, 0}));
  Dataset test = make({cont("x", {8, 0, 3}), cont("k", {7, 5, 1})}, {0, 1, 0});
  apply(step, test);
  EXPECT_EQ(test.columns[0].values, (std::vector<double>{1.0, 0.0, 0.25}));
}

// --- correlation and mutual information -------------------------------------------

TEST(Correlation, LinearAndMonotone) {
  std::vector<double> x, y2, y3;
  for (int i = -5; i <= 10; ++i) {
    x.push_back(i);
    y2.push_back(2.0 * i);
    y3.push_back(static_cast<double>(i) * i * i);
  }
  EXPECT_NEAR(correlation(x, y2, CorrelationKind::kPearson), 1.0, 1e-15);
  EXPECT_NEAR(correlation(x, y3, CorrelationKind::kSpearman), 1.0, 1e-15);
  EXPECT_LT(correlation(x, y3, CorrelationKind::kPearson), 1.0 - 1e-3);
  const std::vector<double> c = {3, 3, 3};
  EXPECT_EQ(correlation(c, std::vector<double>{1, 2, 3}, CorrelationKind::kPearson), 0.0);
  EXPECT_THROW(correlation(x, c, CorrelationKind::kPearson), ShapeError);
}

TEST(Correlation, MatchesDirectFormulas) {
  const std::vector<double> x = {1.2, 3.4, 3.4, 0.5, 7.7, 2.2, 9.1, 3.4};
  const std::vector<double> y = {2.0, 1.0, 4.0, 4.0, 8.5, 0.3, 6.6, 5.0};
  auto direct_pearson = [](const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    double sa = 0, sb = 0, sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      sa += a[i];
      sb += b[i];
      sab += a[i] * b[i];
      saa += a[i] * a[i];
      sbb += b[i] * b[i];
    }
    return (n * sab - sa * sb) / std::sqrt((n * saa - sa * sa) * (n * sbb - sb * sb));
  };
  // Average ranks by counting: rank = #less + (#equal + 1) / 2.
  auto ranks = [](const std::vector<double>& a) {
    std::vector<double> r;
    for (double v : a) {
      double less = 0, equal = 0;
      for (double w : a) {
        less += w < v;
        equal += w == v;
      }
      r.push_back(less + (equal + 1.0) / 2.0);
    }
    return r;
  };
  EXPECT_NEAR(correlation(x, y, CorrelationKind::kPearson), direct_pearson(x, y), 1e-12);
  EXPECT_NEAR(correlation(x, y, CorrelationKind::kSpearman), direct_pearson(ranks(x), ranks(y)),
              1e-12);
}

TEST(MutualInformation, ConstantAndIdentity) {
  std::vector<int> labels;
  std::vector<double> same, constant;
  for (int i = 0; i < 100; ++i) {
    labels.push_back(i % 2);
    same.push_back(i % 2);
    constant.push_back(4.0);
  }
  EXPECT_EQ(mutual_information(constant, labels), 0.0);
  EXPECT_NEAR(mutual_information(same, labels), std::log(2.0), 1e-12);
}

TEST(MutualInformation, MatchesContingencyTableCount) {
  Rng rng(17);
  std::vector<double> x;
  std::vector<int> y;
  for (int i = 0; i < 60; ++i) {
    y.push_back(static_cast<int>(rng.index(3)));
    x.push_back(std::round(10.0 * (y.back() + rng.normal())) / 10.0);
  }
  const auto bins = equal_frequency_bins(x, 10);
  // Brute force: count every (bin, label) cell from scratch.
  const int max_bin = *std::max_element(bins.begin(), bins.end());
  double mi = 0.0;
  const double n = static_cast<double>(x.size());
  for (int b = 0; b <= max_bin; ++b) {
    for (int c = 0; c < 3; ++c) {
      double nbc = 0, nb = 0, nc = 0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        nbc += bins[i] == b && y[i] == c;
        nb += bins[i] == b;
        nc += y[i] == c;
      }
      if (nbc > 0) mi += nbc / n * std::log(nbc * n / (nb * nc));
    }
  }
  EXPECT_NEAR(mutual_information(x, y), mi, 1e-12);
  EXPECT_LE(max_bin, 9);
}

TEST(MutualInformation, EqualFrequencyBinsKeepTiesTogether) {
  const std::vector<double> x = {1, 1, 1, 1, 2, 3, 4, 5, 6, 7};
  const auto b = equal_frequency_bins(x, 5);
  EXPECT_EQ(b[0], b[3]);
  EXPECT_LT(b[3], b[4]);
}

// --- selection ----------------------------------------------------------------------

TEST(PruneCollinear, DuplicatedColumnLosesOneMember) {
  Rng rng(2);
  std::vector<double> a, noise;
  std::vector<int> y;
  for (int i = 0; i < 50; ++i) {
    a.push_back(rng.uniform());
    noise.push_back(rng.uniform());
    y.push_back(i % 2);
  }
  const Dataset d = make({cont("a", a), cont("a_copy", a), cont("noise", noise)}, y);
  const std::vector<double> mi = {0.3, 0.3, 0.1};
  const SelectStep s = fit_prune_collinear(d, 0.85, mi);
  EXPECT_EQ(s.dropped, (std::vector<std::string>{"a_copy"}));  // tie drops the later column
  const std::vector<double> mi2 = {0.1, 0.3, 0.1};
  EXPECT_EQ(fit_prune_collinear(d, 0.85, mi2).dropped, (std::vector<std::string>{"a"}));
}

TEST(PruneCollinear, IndependentColumnsSurvive) {
  Rng rng(8);
  std::vector<Column> cols;
  for (int c = 0; c < 6; ++c) {
    std::vector<double> v;
    for (int i = 0; i < 500; ++i) v.push_back(rng.normal());
    cols.push_back(cont("c" + std::to_string(c), v));
  }
  const Dataset d = make(cols, std::vector<int>(500, 0));
  EXPECT_TRUE(fit_prune_collinear(d, 0.85, std::vector<double>(6, 0.0)).dropped.empty());
}

TEST(PruneCollinear, ChainLeavesNoViolatingPair) {
  Rng rng(9);
  std::vector<double> a, b, c, e;
  for (int i = 0; i < 300; ++i) {
    a.push_back(rng.normal());
    b.push_back(a.back() + 0.3 * rng.normal());
    c.push_back(b.back() + 0.3 * rng.normal());
    e.push_back(rng.normal());
  }
  const Dataset d = make({cont("a", a), cont("b", b), cont("c", c), cont("e", e)},
                         std::vector<int>(300, 0));
  const Dataset out = prune_collinear(d, 0.85, std::vector<double>{0.2, 0.5, 0.3, 0.1});
  ASSERT_FALSE(out.columns.empty());
  EXPECT_LT(out.columns.size(), 4u);
  for (std::size_t i = 0; i < out.columns.size(); ++i) {
    for (std::size_t j = i + 1; j < out.columns.size(); ++j) {
      const double p = correlation(out.columns[i].values, out.columns[j].values, CorrelationKind::kPearson);
      const double s = correlation(out.columns[i].values, out.columns[j].values, CorrelationKind::kSpearman);
      EXPECT_LE(std::max(std::abs(p), std::abs(s)), 0.85);
    }
  }
}

TEST(SelectTopK, IdentityAndPlantedFeature) {
  Rng rng(4);
  std::vector<double> f0, f1, f2, copy;
  std::vector<int> y;
  for (int i = 0; i < 200; ++i) {
    y.push_back(static_cast<int>(rng.index(3)));
    f0.push_back(rng.uniform());
    f1.push_back(rng.uniform());
    f2.push_back(rng.uniform());
    copy.push_back(y.back());
  }
  const Dataset d = make({cont("f0", f0), cont("f1", f1), cont("label_copy", copy), cont("f2", f2)}, y);
  const auto mi = mutual_information_scores(d);
  EXPECT_EQ(select_top_k(d, mi, 4).feature_names(), d.feature_names());
  const SelectStep over = fit_select_top_k(d, mi, 9);
  EXPECT_TRUE(over.dropped.empty());
  EXPECT_EQ(over.warnings.size(), 1u);
  EXPECT_EQ(select_top_k(d, mi, 1).feature_names(), (std::vector<std::string>{"label_copy"}));
}

TEST(SelectTopK, KnownOrderKeepsSchemaPositions) {
  std::vector<int> y;
  std::vector<double> strong, weak, medium, none;
  for (int i = 0; i < 120; ++i) {
    const int label = i % 4;
    y.push_back(label);
    strong.push_back(label);             // ln 4
    medium.push_back(label / 2);         // ln 2
    weak.push_back(label == 0 ? 1 : 0);  // below ln 2
    none.push_back(1.0);
  }
  const Dataset d = make({cont("weak", weak), cont("strong", strong), cont("none", none),
                          cont("medium", medium)},
                         y, {"a", "b", "c", "d"});
  const auto mi = mutual_information_scores(d);
  EXPECT_NEAR(mi[1], std::log(4.0), 1e-12);
  EXPECT_NEAR(mi[3], std::log(2.0), 1e-12);
  EXPECT_EQ(select_top_k(d, mi, 2).feature_names(), (std::vector<std::string>{"strong", "medium"}));
}

// --- split ----------------------------------------------------------------------

TEST(StratifiedSplit, SingleClassOfTen) {
  const std::vector<int> labels(10, 0);
  const auto s = stratified_split(labels, 0.8, 1);
  EXPECT_EQ(s.train.size(), 8u);
  EXPECT_EQ(s.test.size(), 2u);
}

TEST(StratifiedSplit, PerClassShareWithinOneRow) {
  Rng rng(21);
  std::vector<int> labels;
  for (int i = 0; i < 1037; ++i) labels.push_back(static_cast<int>(std::min<std::uint64_t>(rng.index(7), rng.index(7))));
  const auto s = stratified_split(labels, 0.8, 3);
  std::map<int, double> total, train;
  for (int l : labels) total[l] += 1;
  for (auto i : s.train) train[labels[i]] += 1;
  for (const auto& [c, n] : total) EXPECT_LT(std::abs(train[c] - 0.8 * n), 1.0) << "class " << c;
  EXPECT_EQ(s.train.size(), static_cast<std::size_t>(std::floor(0.8 * 1037)));
  std::set<std::size_t> all(s.train.begin(), s.train.end());
  all.insert(s.test.begin(), s.test.end());
  EXPECT_EQ(all.size(), labels.size());
  const auto again = stratified_split(labels, 0.8, 3);
  EXPECT_EQ(again.train, s.train);
  EXPECT_NE(stratified_split(labels, 0.8, 4).train, s.train);
}

TEST(StratifiedSplit, TinyClassIsAnError) {
  const std::vector<int> labels = {0, 0, 0, 1};
  EXPECT_THROW(stratified_split(labels, 0.8, 1), DataError);
  const auto s = stratified_split(labels, 0.5, 1, true);
  EXPECT_TRUE(std::find(s.train.begin(), s.train.end(), 3u) != s.train.end());
}

// --- smote ----------------------------------------------------------------------

TEST(Smote, TwoPointClassStaysOnTheSegment) {
  Dataset d = make({cont("x", {0, 1, 5, 5, 5, 5}), cont("y", {0, 1, 5, 5, 5, 5})},
                   {1, 1, 0, 0, 0, 0});
  SmoteOptions o;
  o.k_neighbors = 1;
  o.target_ratio = 1.0;
  const SmoteResult r = smote(d, o);
  ASSERT_EQ(r.data.rows(), 8u);
  for (std::size_t i = 6; i < 8; ++i) {
    const double x = r.data.columns[0].values[i], y = r.data.columns[1].values[i];
    EXPECT_EQ(x, y);
    EXPECT_GT(x, 0.0);
    EXPECT_LT(x, 1.0);
    EXPECT_EQ(r.data.labels[i], 1);
    EXPECT_EQ(r.data.synthetic[i], 1);
  }
}

TEST(Smote, GrowsMinorityToTargetAndNeverShrinks) {
  Rng rng(6);
  std::vector<double> a, b;
  std::vector<int> y;
  for (int i = 0; i < 110; ++i) {
    y.push_back(i < 100 ? 0 : 1);
    a.push_back(rng.uniform());
    b.push_back(rng.uniform());
  }
  const Dataset d = make({cont("a", a), cont("b", b)}, y);
  SmoteOptions o;
  o.target_ratio = 1.0;
  const SmoteResult r = smote(d, o);
  std::map<int, std::size_t> count;
  for (int l : r.data.labels) ++count[l];
  EXPECT_EQ(count[0], 100u);
  EXPECT_EQ(count[1], 100u);
  o.target_ratio = 0.5;
  const SmoteResult half = smote(d, o);
  std::map<int, std::size_t> c2;
  for (int l : half.data.labels) ++c2[l];
  EXPECT_EQ(c2[1], 50u);
  EXPECT_EQ(c2[0], 100u);
  for (std::size_t i = 110; i < r.data.rows(); ++i) {
    EXPECT_EQ(r.data.labels[i], 1);
    for (std::size_t j = 100; j < 110; ++j) {
      EXPECT_FALSE(r.data.columns[0].values[i] == a[j] && r.data.columns[1].values[i] == b[j]);
    }
  }
  EXPECT_EQ(r.data.provenance.back()["op"], "smote");
}

TEST(Smote, SingletonClassIsSkippedWithWarning) {
  const Dataset d = make({cont("a", {0, 1, 2, 3, 9})}, {0, 0, 0, 0, 1});
  SmoteOptions o;
  o.target_ratio = 1.0;
  const SmoteResult r = smote(d, o);
  EXPECT_EQ(r.data.rows(), 5u);
  EXPECT_EQ(r.warnings.size(), 1u);
}

// --- windows ----------------------------------------------------------------------

std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

TEST(Windows, CountsAtTheBoundaries) {
  std::vector<int> labels(100, 0);
  EXPECT_EQ(make_windows(iota(100), labels, 50, 5).size(), 11u);
  EXPECT_EQ(make_windows(iota(50), labels, 50, 5).size(), 1u);
  const WindowSet none = make_windows(iota(49), labels, 50, 5);
  EXPECT_EQ(none.size(), 0u);
  EXPECT_EQ(none.warnings.size(), 1u);
}

TEST(Windows, LastEventLabelAndStrideProgression) {
  std::vector<int> labels(73);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 3);
  const WindowSet w = make_windows(iota(73), labels, 10, 4);
  ASSERT_EQ(w.size(), (73 - 10) / 4 + 1);
  for (std::size_t i = 0; i < w.size(); ++i) {
    ASSERT_EQ(w.windows[i].size(), 10u);
    EXPECT_EQ(w.windows[i].front(), i * 4);
    for (std::size_t t = 1; t < 10; ++t) EXPECT_EQ(w.windows[i][t], w.windows[i][t - 1] + 1);
    EXPECT_EQ(w.labels[i], labels[w.windows[i].back()]);
  }
}

TEST(Windows, TimeOrderIsStable) {
  const std::vector<double> ts = {3.0, 1.0, 3.0, 2.0, 1.0};
  EXPECT_EQ(time_order(ts), (std::vector<std::size_t>{1, 4, 3, 0, 2}));
}

// --- transform --------------------------------------------------------------------

Dataset mixed_fixture(std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  std::vector<double> dur, bytes, bytes2, flat;
  std::vector<std::string> proto;
  std::vector<int> y;
  const std::vector<std::string> protos = {"tcp", "udp", "icmp"};
  for (std::size_t i = 0; i < n; ++i) {
    y.push_back(static_cast<int>(rng.index(3)));
    dur.push_back(rng.bernoulli(0.1) ? kNaN : rng.lognormal(0, 1) + y.back());
    bytes.push_back(rng.lognormal(5, 1));
    bytes2.push_back(bytes.back() * 2 + 1);
    flat.push_back(rng.normal());
    proto.push_back(rng.bernoulli(0.05) ? "" : protos[rng.index(3)]);
  }
  return make({cont("dur", dur), cat("proto", proto), cont("bytes", bytes),
               cont("bytes2", bytes2), cont("flat", flat)},
              y);
}

TEST(Transform, FitOnTrainReplayOnTest) {
  Dataset train = mixed_fixture(1, 300);
  const Dataset raw_train = train;
  PreprocessOptions o;
  o.top_k = 5;
  const Transform t = fit_transform(train, o);
  for (const auto& c : train.columns) {
    if (c.kind != FeatureKind::kContinuous) continue;
    const auto [lo, hi] = std::minmax_element(c.values.begin(), c.values.end());
    EXPECT_EQ(*lo, 0.0) << c.name;
    EXPECT_EQ(*hi, 1.0) << c.name;
  }
  EXPECT_FALSE(train.column_index("bytes2") && train.column_index("bytes"));

  Dataset test1 = mixed_fixture(2, 80), test2 = test1;
  t.apply(test1);
  t.apply(test2);
  EXPECT_EQ(test1.feature_matrix(), test2.feature_matrix());
  EXPECT_EQ(test1.feature_names(), train.feature_names());

  Dataset replay = raw_train;
  Transform::from_provenance(train.provenance, train.class_names).apply(replay);
  EXPECT_EQ(replay.feature_matrix(), train.feature_matrix());
}

TEST(Transform, SaveLoadRoundTrip) {
  Dataset train = mixed_fixture(3, 200);
  const Transform t = fit_transform(train);
  const auto path = testing::temp_path("hids_transform_test.json");
  t.save(path);
  const Transform back = Transform::load(path);
  EXPECT_EQ(back.to_json(), t.to_json());
  Dataset a = mixed_fixture(4, 50), b = a;
  t.apply(a);
  back.apply(b);
  EXPECT_EQ(a.feature_matrix(), b.feature_matrix());
  std::ofstream(path) << "{\"format\": \"something-else\"}";
  EXPECT_THROW(Transform::load(path), FormatError);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace hids
