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

#include <cmath>
#include <sstream>

#include "hids/error.hpp"
#include "hids/evaluate.hpp"
#include "hids/metrics.hpp"
#include "support.hpp"

namespace hids {
namespace {

using ag::Matrix;

TEST(Confusion, PerfectAndConstantPredictions) {
  const std::vector<int> truth = {0, 1, 2, 1, 0, 2, 2};
  const ConfusionMatrix perfect = confusion(truth, truth, 3);
  for (std::size_t t = 0; t < 3; ++t) {
    for (std::size_t p = 0; p < 3; ++p) {
      if (t != p) {
        EXPECT_EQ(perfect.counts[t][p], 0u);
      }
    }
  }
  EXPECT_EQ(perfect.trace(), 7u);
  const std::vector<int> zeros(7, 0);
  const ConfusionMatrix all0 = confusion(truth, zeros, 3);
  EXPECT_EQ(all0.predicted(0), 7u);
  EXPECT_EQ(all0.predicted(1) + all0.predicted(2), 0u);
  EXPECT_EQ(all0.classes, (std::vector<std::string>{"0", "1", "2"}));
}

TEST(Confusion, TwelveLabelHandCount) {
  const std::vector<int> truth = {0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2};
  const std::vector<int> pred = {0, 0, 1, 2, 1, 1, 1, 0, 2, 2, 1, 2};
  const ConfusionMatrix m = confusion(truth, pred, 3, {"n", "x", "y"});
  const std::vector<std::vector<std::uint64_t>> expected = {{2, 1, 1}, {1, 3, 0}, {0, 1, 3}};
  EXPECT_EQ(m.counts, expected);
  const ClassScores s = prf1(m, 1);
  EXPECT_DOUBLE_EQ(s.precision, 3.0 / 5.0);
  EXPECT_DOUBLE_EQ(s.recall, 3.0 / 4.0);
  EXPECT_NEAR(s.f1, 2.0 / 3.0, 1e-15);
  EXPECT_THROW(confusion(truth, std::vector<int>(11, 0), 3), ShapeError);
  EXPECT_THROW(confusion(truth, std::vector<int>(12, 3), 3), DataError);
}

TEST(Prf1, PublishedRows) {
  EXPECT_NEAR(100 * harmonic_f1(0.963, 0.982), 97.2, 0.05);
  EXPECT_NEAR(100 * harmonic_f1(0.908, 0.916), 91.2, 0.05);
}

TEST(Prf1, AbsentClassIsUndefined) {
  const std::vector<int> truth = {0, 1, 0}, pred = {0, 1, 1};
  const ClassScores s = prf1(confusion(truth, pred, 3), 2);
  EXPECT_EQ(s.precision, 0.0);
  EXPECT_EQ(s.recall, 0.0);
  EXPECT_EQ(s.f1, 0.0);
  EXPECT_TRUE(s.undefined);
  EXPECT_EQ(harmonic_f1(0.0, 0.0), 0.0);
  // Macro F1 skips the absent class.
  const auto m = confusion(truth, pred, 3);
  EXPECT_NEAR(macro_f1(m), (prf1(m, 0).f1 + prf1(m, 1).f1) / 2.0, 1e-15);
}

double brute_auc(const std::vector<double>& s, const std::vector<std::uint8_t>& pos) {
  double wins = 0, pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!pos[i]) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (pos[j]) continue;
      pairs += 1;
      wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return wins / pairs;
}

TEST(RankAuc, SeparatedTiedAndSixPoint) {
  const std::vector<double> sep = {0.1, 0.2, 0.8, 0.9};
  const std::vector<std::uint8_t> pos = {0, 0, 1, 1};
  EXPECT_EQ(*rank_auc(sep, pos), 1.0);
  const std::vector<double> same = {0.5, 0.5, 0.5, 0.5};
  EXPECT_EQ(*rank_auc(same, pos), 0.5);
  const std::vector<double> six = {0.3, 0.7, 0.7, 0.2, 0.9, 0.3};
  const std::vector<std::uint8_t> six_pos = {1, 0, 1, 0, 1, 0};
  EXPECT_EQ(*rank_auc(six, six_pos), brute_auc(six, six_pos));
  EXPECT_FALSE(rank_auc(sep, std::vector<std::uint8_t>(4, 1)).has_value());
}

TEST(RankAuc, RandomSetsMatchPairwiseCount) {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> s;
    std::vector<std::uint8_t> pos;
    for (int i = 0; i < 30; ++i) {
      s.push_back(static_cast<double>(rng.index(8)) / 8.0);  // coarse grid forces ties
      pos.push_back(i < 2 ? static_cast<std::uint8_t>(i) : static_cast<std::uint8_t>(rng.bernoulli(0.4)));
    }
    EXPECT_EQ(*rank_auc(s, pos), brute_auc(s, pos));
  }
}

Matrix random_probabilities(Rng& rng, std::size_t n, std::size_t c) {
  Matrix p(static_cast<ag::Index>(n), static_cast<ag::Index>(c));
  for (ag::Index i = 0; i < p.rows(); ++i) {
    for (ag::Index j = 0; j < p.cols(); ++j) p(i, j) = rng.uniform() + 1e-3;
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

TEST(MacroAuc, MonotoneTransformInvariantAndWarnsOnMissingClass) {
  Rng rng(8);
  const Matrix p = random_probabilities(rng, 50, 3);
  std::vector<int> truth;
  for (int i = 0; i < 50; ++i) truth.push_back(i % 2);  // class 2 never occurs
  const MacroAuc a = macro_auc(p, truth, {"a", "b", "c"});
  const Matrix q = p.unaryExpr([](double x) { return std::exp(3.0 * x) - 7.0; });
  EXPECT_EQ(macro_auc(q, truth, {"a", "b", "c"}).value, a.value);
  EXPECT_EQ(a.classes_used, 2u);
  EXPECT_EQ(a.warnings.size(), 1u);
}

TEST(Metrics, MajorityPredictorOnNinetyTen) {
  Matrix p(100, 2);
  std::vector<int> truth;
  for (int i = 0; i < 100; ++i) {
    truth.push_back(i < 90 ? 0 : 1);
    p(i, 0) = 0.8;
    p(i, 1) = 0.2;
  }
  const MetricsReport r = compute_metrics(p, truth, {"Normal", "attack"});
  EXPECT_DOUBLE_EQ(r.accuracy, 0.9);
  EXPECT_EQ(r.per_class[1].recall, 0.0);
  EXPECT_EQ(r.false_positive_rate, 0.0);
}

TEST(Metrics, FalsePositiveRateAgainstNormal) {
  Matrix p = Matrix::Zero(4, 2);
  p(0, 0) = p(1, 0) = p(2, 1) = p(3, 1) = 1.0;
  const std::vector<int> all_normal_truth = {0, 0, 0, 0};
  Matrix perfect = Matrix::Zero(4, 2);
  perfect.col(0).setOnes();
  EXPECT_EQ(compute_metrics(perfect, all_normal_truth, {"Normal", "x"}).false_positive_rate, 0.0);
  EXPECT_EQ(compute_metrics(p, all_normal_truth, {"Normal", "x"}).false_positive_rate, 0.5);
  EXPECT_TRUE(std::isnan(compute_metrics(p, all_normal_truth, {"benign", "x"}).false_positive_rate));
}

TEST(Metrics, ReportIsRecomputableFromExportedConfusion) {
  Rng rng(9);
  const Matrix p = random_probabilities(rng, 200, 4);
  std::vector<int> truth;
  for (int i = 0; i < 200; ++i) {
    // Bias the truth toward the argmax so the metrics are not trivial.
    ag::Index best;
    p.row(i).maxCoeff(&best);
    truth.push_back(rng.bernoulli(0.6) ? static_cast<int>(best) : static_cast<int>(rng.index(4)));
  }
  const MetricsReport r = compute_metrics(p, truth, {"Normal", "a", "b", "c"});
  const std::string text = to_text(r);
  const ConfusionMatrix m = parse_report_confusion(text);
  const auto values = parse_report_values(text);
  EXPECT_EQ(m.counts, r.confusion.counts);
  EXPECT_DOUBLE_EQ(values.at("accuracy"), static_cast<double>(m.trace()) / static_cast<double>(m.total()));
  double recall_num = 0;
  for (std::size_t c = 0; c < 4; ++c) recall_num += static_cast<double>(m.counts[c][c]);
  EXPECT_DOUBLE_EQ(recall_num / static_cast<double>(m.total()), r.accuracy);  // micro recall
  double f1 = 0;
  for (std::size_t c = 0; c < 4; ++c) {
    const double tp = static_cast<double>(m.counts[c][c]);
    const double prec = tp / static_cast<double>(m.predicted(c));
    const double rec = tp / static_cast<double>(m.support(c));
    f1 += 2 * prec * rec / (prec + rec);
    EXPECT_DOUBLE_EQ(values.at("class." + r.classes[c] + ".precision"), prec);
  }
  EXPECT_NEAR(values.at("macro_f1"), f1 / 4.0, 1e-15);
  EXPECT_EQ(argmax_rows(p).size(), 200u);
}

TEST(ArgmaxRows, TiesGoLow) {
  Matrix p(2, 3);
  p << 0.2, 0.4, 0.4, 0.5, 0.5, 0.0;
  EXPECT_EQ(argmax_rows(p), (std::vector<int>{1, 0}));
}

// --- evaluation harness -------------------------------------------------------

TEST(Evaluate, MatchesComputeMetricsAndChecksShapes) {
  const ModelConfig c = testing::tiny_config(Variant::kFull, 2);
  const auto toy = testing::separable_toy(1, c, 30);
  HybridModel m(c);
  const Evaluation e = evaluate(m, toy.windows, toy.labels, {"Normal", "attack"}, 7);
  const Matrix p = predict_probabilities(m, toy.windows);
  EXPECT_EQ(e.probabilities, p);
  EXPECT_EQ(to_text(e.report), to_text(compute_metrics(p, toy.labels, {"Normal", "attack"})));
  EXPECT_THROW(evaluate(m, toy.windows, toy.labels, {"a", "b", "c"}), ShapeError);
}

TEST(Ablate, RowsInRequestOrderAndHarnessConsistency) {
  const ModelConfig c = testing::tiny_config(Variant::kFull, 2);
  const auto train = testing::separable_toy(2, c, 60);
  const auto test = testing::separable_toy(3, c, 20);
  TrainConfig t;
  t.batch_size = 16;
  t.lr = 0.01;
  t.max_epochs = 30;
  t.patience = 5;
  t.val_fraction = 0.25;
  const std::vector<Variant> variants = {Variant::kLstmOnly, Variant::kFull, Variant::kGnnOnly,
                                         Variant::kNoAttention, Variant::kNoGnn, Variant::kNoLstm};
  const auto rows = ablate(train.windows, train.labels, test.windows, test.labels, {"Normal", "attack"},
                           c, t, variants);
  ASSERT_EQ(rows.size(), variants.size());
  for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_EQ(rows[i].variant, variants[i]);

  HybridModel standalone(c);
  const TrainReport r = fit(standalone, train.windows, train.labels, t);
  const Evaluation e = evaluate(standalone, test.windows, test.labels, {"Normal", "attack"});
  EXPECT_EQ(r.to_log(), rows[1].training.to_log());
  EXPECT_EQ(to_text(e.report), to_text(rows[1].report));

  // Seeded regression on the separable fixture.
  for (const auto& row : rows) EXPECT_GE(rows[1].report.macro_f1, row.report.macro_f1);

  const std::string table = ablation_table(rows);
  EXPECT_NE(table.find("[ablation]"), std::string::npos);
  EXPECT_NE(table.find("lstm_only.macro_f1="), std::string::npos);
}

TEST(Attention, SingleStepAndZeroQueryTraces) {
  ModelConfig c = testing::tiny_config(Variant::kFull, 2);
  c.seq_len = 1;
  const auto toy = testing::separable_toy(4, c, 3);
  HybridModel m(c);
  const auto one = attention_traces(m, toy.windows, toy.labels);
  ASSERT_EQ(one.size(), 3u);
  EXPECT_EQ(one[0].heads[0], Matrix::Ones(1, 1));

  ModelConfig c2 = testing::tiny_config(Variant::kFull, 2);
  c2.heads = 2;
  c2.head_dim = 3;
  HybridModel z(c2);
  for (int h = 0; h < 2; ++h) z.parameter("attention.head" + std::to_string(h) + ".W_q").value.setZero();
  const auto toy2 = testing::separable_toy(5, c2, 4);
  const std::vector<std::size_t> ids = {10, 11, 12, 13};
  const auto traces = attention_traces(z, toy2.windows, toy2.labels, ids);
  for (const auto& tr : traces) {
    for (const auto& h : tr.heads) EXPECT_LT((h.array() - 0.2).abs().maxCoeff(), 1e-15);
    ASSERT_EQ(tr.salience.size(), 5u);
    double total = 0;
    for (double s : tr.salience) total += s;
    EXPECT_NEAR(total, 5.0, 1e-6);
  }
  EXPECT_EQ(traces[2].window, 12u);
  HybridModel no_attention(testing::tiny_config(Variant::kGnnOnly, 2));
  EXPECT_THROW(attention_traces(no_attention, toy2.windows, toy2.labels), ConfigError);
}

TEST(Attention, ExportRoundTripAndRowCheck) {
  ModelConfig c = testing::tiny_config(Variant::kFull, 2);
  c.heads = 2;
  c.head_dim = 3;
  const auto toy = testing::separable_toy(6, c, 5);
  HybridModel m(c);
  const auto traces = attention_traces(m, toy.windows, toy.labels);
  std::stringstream buffer;
  write_attention(buffer, traces, {"Normal", "attack"});
  EXPECT_NE(buffer.str().find("WINDOW 0 T 5 HEADS 2 TRUE"), std::string::npos);
  const auto back = read_attention(buffer, {"Normal", "attack"});
  ASSERT_EQ(back.size(), traces.size());
  for (std::size_t i = 0; i < traces.size(); ++i) {
    EXPECT_EQ(back[i].heads[1], traces[i].heads[1]);
    EXPECT_EQ(back[i].salience, traces[i].salience);
    EXPECT_EQ(back[i].predicted_class, traces[i].predicted_class);
    for (const auto& h : back[i].heads) {
      for (ag::Index r = 0; r < h.rows(); ++r) EXPECT_NEAR(h.row(r).sum(), 1.0, 1e-9);
    }
  }
  auto broken = traces;
  broken[0].heads[0](1, 1) += 0.01;
  std::stringstream sink;
  EXPECT_THROW(write_attention(sink, broken, {"Normal", "attack"}), NumericError);
}

}  // namespace
}  // namespace hids
