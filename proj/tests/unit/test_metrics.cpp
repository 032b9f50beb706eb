#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "amscreen/error.hpp"
#include "amscreen/metrics.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace amscreen;
using namespace amscreen::metrics;
using amscreen::testing::table2_matrix;

namespace {

constexpr auto kNeg = SentimentLabel::negative;
constexpr auto kNeu = SentimentLabel::neutral;
constexpr auto kPos = SentimentLabel::positive;

ConfusionMatrix3 diag(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return ConfusionMatrix3({{{a, 0, 0}, {0, b, 0}, {0, 0, c}}});
}

using oracle::Binary;
using oracle::collapse;

std::string collapse_spaces(const std::string& s) {
  std::string out;
  for (char ch : s) {
    if (ch == ' ') {
      if (!out.empty() && out.back() != ' ') out += ' ';
    } else {
      out += ch;
    }
  }
  return out;
}

}  // namespace

TEST(ConfusionMatrix, EmptyPairsGiveZeroMatrix) {
  const ConfusionMatrix3 m = build_confusion_matrix({});
  EXPECT_EQ(m.total(), 0u);
  EXPECT_EQ(m, ConfusionMatrix3{});
}

TEST(ConfusionMatrix, SingleCell) {
  std::vector<PredictionPair> pairs(5, PredictionPair{kNeu, kNeu});
  const ConfusionMatrix3 m = build_confusion_matrix(pairs);
  EXPECT_EQ(m.at(kNeu, kNeu), 5u);
  EXPECT_EQ(m.total(), 5u);
  EXPECT_EQ(m.trace(), 5u);
}

TEST(ConfusionMatrix, Table2PairsRebuildTable2) {
  const auto pairs = amscreen::testing::expand_pairs(table2_matrix());
  ASSERT_EQ(pairs.size(), 1766u);
  const ConfusionMatrix3 m = build_confusion_matrix(pairs);
  EXPECT_EQ(m, table2_matrix());
  EXPECT_EQ(m.row_sum(kNeg), 75u);
  EXPECT_EQ(m.column_sum(kNeg), 82u);
  EXPECT_EQ(m.column_sum(kPos), 35u);
}

TEST(PerClass, Table2Negative) {
  const auto pc = per_class_metrics(table2_matrix());
  ASSERT_TRUE(pc[0].precision);
  EXPECT_DOUBLE_EQ(*pc[0].precision, 50.0 / 75.0);
  EXPECT_NEAR(*pc[0].precision, 0.6667, 0.0034);
  // "66 percent" read as a whole-percent truncation.
  EXPECT_EQ(static_cast<int>(*pc[0].precision * 100), 66);
  EXPECT_DOUBLE_EQ(*pc[0].recall, 50.0 / 82.0);
  EXPECT_EQ(pc[0].support, 82u);
}

TEST(PerClass, Table2PositiveBelowHalf) {
  const auto pc = per_class_metrics(table2_matrix());
  EXPECT_DOUBLE_EQ(*pc[2].precision, 0.425);
  EXPECT_DOUBLE_EQ(*pc[2].recall, 17.0 / 35.0);
  EXPECT_LT(*pc[2].precision, 0.5);
  EXPECT_LT(*pc[2].recall, 0.5);
  EXPECT_EQ(format_metric(pc[2].recall), "0.4857");
}

TEST(PerClass, PerfectClassifier) {
  for (const PerClassMetrics& pc : per_class_metrics(diag(10, 10, 10))) {
    EXPECT_EQ(pc.precision, 1.0);
    EXPECT_EQ(pc.recall, 1.0);
    EXPECT_EQ(pc.f1, 1.0);
  }
}

TEST(PerClass, ZeroDenominatorsAreUndefinedNotZero) {
  // Nothing predicted positive and nothing actually positive.
  const ConfusionMatrix3 m({{{3, 1, 0}, {2, 4, 0}, {0, 0, 0}}});
  const auto pc = per_class_metrics(m);
  EXPECT_FALSE(pc[2].precision.has_value());
  EXPECT_FALSE(pc[2].recall.has_value());
  EXPECT_FALSE(pc[2].f1.has_value());
  EXPECT_EQ(pc[2].support, 0u);
}

TEST(PerClass, F1UndefinedWhenPrecisionAndRecallBothZero) {
  const ConfusionMatrix3 m({{{0, 1, 0}, {1, 0, 0}, {0, 0, 0}}});
  const auto pc = per_class_metrics(m);
  EXPECT_EQ(pc[0].precision, 0.0);
  EXPECT_EQ(pc[0].recall, 0.0);
  EXPECT_FALSE(pc[0].f1.has_value());
}

TEST(Accuracy, Table2) {
  const Metric acc = overall_accuracy(table2_matrix());
  ASSERT_TRUE(acc);
  EXPECT_DOUBLE_EQ(*acc, 1670.0 / 1766.0);
  EXPECT_EQ(format_metric(acc), "0.9456");
}

TEST(Accuracy, PerfectAllWrongAndEmpty) {
  EXPECT_EQ(overall_accuracy(diag(1, 1, 1)), 1.0);
  EXPECT_EQ(overall_accuracy(ConfusionMatrix3({{{0, 3, 1}, {2, 0, 5}, {4, 1, 0}}})), 0.0);
  EXPECT_FALSE(overall_accuracy(ConfusionMatrix3{}).has_value());
}

TEST(Weighted, Table2MatchesHandComputation) {
  const WeightedMetrics w = weighted_metrics(table2_matrix());
  // Hand oracle: per-class precision times actual support, over 1766.
  const double wp = ((50.0 / 75.0) * 82 + (1603.0 / 1651.0) * 1649 + (17.0 / 40.0) * 35) / 1766.0;
  auto f1 = [](double p, double r) { return 2 * p * r / (p + r); };
  const double wf = (f1(50.0 / 75, 50.0 / 82) * 82 + f1(1603.0 / 1651, 1603.0 / 1649) * 1649 +
                     f1(17.0 / 40, 17.0 / 35) * 35) /
                    1766.0;
  EXPECT_NEAR(*w.weighted_precision, wp, 1e-12);
  EXPECT_NEAR(*w.weighted_f1, wf, 1e-12);
  EXPECT_EQ(*w.weighted_recall, *w.accuracy);
  EXPECT_FALSE(w.has_undefined_classes);
  EXPECT_EQ(format_metric(w.weighted_precision), "0.9460");
}

TEST(Weighted, UndefinedClassCountsAsZeroAndIsMarked) {
  // Positive is never predicted: its precision is undefined, support 5.
  const ConfusionMatrix3 m({{{10, 0, 2}, {0, 10, 3}, {0, 0, 0}}});
  const WeightedMetrics w = weighted_metrics(m);
  EXPECT_TRUE(w.has_undefined_classes);
  const double expected = ((10.0 / 12) * 10 + (10.0 / 13) * 10 + 0.0 * 5) / 25.0;
  EXPECT_NEAR(*w.weighted_precision, expected, 1e-12);
}

TEST(Weighted, EmptyMatrixUndefined) {
  const WeightedMetrics w = weighted_metrics(ConfusionMatrix3{});
  EXPECT_FALSE(w.accuracy);
  EXPECT_FALSE(w.weighted_precision);
  EXPECT_FALSE(w.weighted_recall);
  EXPECT_FALSE(w.weighted_f1);
}

TEST(CrossRates, Table2) {
  const CrossRates r = cross_misclassification_rates(table2_matrix());
  EXPECT_EQ(r.predicted_positive_given_actual_negative, 0.0);
  EXPECT_DOUBLE_EQ(*r.predicted_negative_given_actual_positive, 2.0 / 35.0);
  EXPECT_NEAR(*r.predicted_negative_given_actual_positive, 0.0571, 0.0005);
}

TEST(CrossRates, DiagonalAndEmptyPositiveColumn) {
  const CrossRates d = cross_misclassification_rates(diag(4, 5, 6));
  EXPECT_EQ(d.predicted_positive_given_actual_negative, 0.0);
  EXPECT_EQ(d.predicted_negative_given_actual_positive, 0.0);
  const CrossRates e = cross_misclassification_rates(ConfusionMatrix3({{{4, 1, 0}, {1, 4, 0}, {1, 0, 0}}}));
  EXPECT_EQ(e.predicted_positive_given_actual_negative, 1.0 / 6.0);
  EXPECT_FALSE(e.predicted_negative_given_actual_positive.has_value());
}

// ---------------------------------------------------------------------------
// Properties over random matrices

class RandomMatrices : public ::testing::Test {
 protected:
  std::vector<ConfusionMatrix3> matrices() { return oracle::random_matrices(); }
};

TEST_F(RandomMatrices, PerClassMatchesBinaryOracle) {
  for (const ConfusionMatrix3& m : matrices()) {
    const auto pc = per_class_metrics(m);
    for (std::size_t c = 0; c < 3; ++c) {
      const Binary b = collapse(m.counts(), c);
      if (b.tp + b.fp > 0) {
        ASSERT_TRUE(pc[c].precision);
        EXPECT_NEAR(*pc[c].precision, b.tp / (b.tp + b.fp), 1e-12);
      } else {
        EXPECT_FALSE(pc[c].precision);
      }
      if (b.tp + b.fn > 0) {
        ASSERT_TRUE(pc[c].recall);
        EXPECT_NEAR(*pc[c].recall, b.tp / (b.tp + b.fn), 1e-12);
      } else {
        EXPECT_FALSE(pc[c].recall);
      }
      EXPECT_EQ(pc[c].support, static_cast<std::uint64_t>(b.tp + b.fn));
      if (pc[c].precision && pc[c].recall && *pc[c].precision + *pc[c].recall > 0) {
        const double p = *pc[c].precision, r = *pc[c].recall;
        ASSERT_TRUE(pc[c].f1);
        EXPECT_NEAR(*pc[c].f1, 2 * p * r / (p + r), 1e-12);
      }
    }
  }
}

TEST_F(RandomMatrices, WeightedRecallEqualsAccuracyExactly) {
  for (const ConfusionMatrix3& m : matrices()) {
    if (m.total() == 0) continue;
    const WeightedMetrics w = weighted_metrics(m);
    ASSERT_TRUE(w.weighted_recall && w.accuracy);
    EXPECT_EQ(*w.weighted_recall, *w.accuracy);
  }
}

TEST_F(RandomMatrices, WeightedRecallMatchesSupportWeightedSum) {
  for (const ConfusionMatrix3& m : matrices()) {
    if (m.total() == 0) continue;
    double sum = 0;
    for (const PerClassMetrics& pc : per_class_metrics(m)) sum += pc.recall.value_or(0.0) * pc.support;
    EXPECT_NEAR(*weighted_metrics(m).weighted_recall, sum / m.total(), 1e-12);
  }
}

TEST_F(RandomMatrices, AccuracyBetweenMinAndMaxRecall) {
  for (const ConfusionMatrix3& m : matrices()) {
    if (m.total() == 0) continue;
    double lo = 1.0, hi = 0.0;
    for (const PerClassMetrics& pc : per_class_metrics(m)) {
      if (!pc.recall) continue;
      lo = std::min(lo, *pc.recall);
      hi = std::max(hi, *pc.recall);
    }
    const double acc = *overall_accuracy(m);
    EXPECT_GE(acc, lo - 1e-15);
    EXPECT_LE(acc, hi + 1e-15);
  }
}

TEST_F(RandomMatrices, PermutationConsistency) {
  std::array<std::size_t, 3> perm{0, 1, 2};
  std::vector<std::array<std::size_t, 3>> perms;
  do perms.push_back(perm);
  while (std::next_permutation(perm.begin(), perm.end()));

  for (const ConfusionMatrix3& m : matrices()) {
    const auto base = per_class_metrics(m);
    const WeightedMetrics wb = weighted_metrics(m);
    for (const auto& pi : perms) {
      ConfusionMatrix3::Counts c{};
      for (std::size_t p = 0; p < 3; ++p) {
        for (std::size_t a = 0; a < 3; ++a) c[pi[p]][pi[a]] = m.counts()[p][a];
      }
      const ConfusionMatrix3 pm(c);
      const auto moved = per_class_metrics(pm);
      for (std::size_t k = 0; k < 3; ++k) {
        EXPECT_EQ(moved[pi[k]].precision, base[k].precision);
        EXPECT_EQ(moved[pi[k]].recall, base[k].recall);
        EXPECT_EQ(moved[pi[k]].support, base[k].support);
      }
      const WeightedMetrics wp = weighted_metrics(pm);
      EXPECT_EQ(wp.accuracy, wb.accuracy);
      // Summation order changes with the permutation, so allow rounding.
      if (wb.weighted_precision) EXPECT_NEAR(*wp.weighted_precision, *wb.weighted_precision, 1e-12);
      if (wb.weighted_f1) EXPECT_NEAR(*wp.weighted_f1, *wb.weighted_f1, 1e-12);
    }
  }
}

// ---------------------------------------------------------------------------
// Reports

TEST(Report, TextTableMirrorsTable2Rows) {
  const std::string text = render_report(make_report(table2_matrix()), ReportFormat::text);
  const std::string flat = collapse_spaces(text);
  EXPECT_NE(flat.find("negative 50 23 2"), std::string::npos) << text;
  EXPECT_NE(flat.find("neutral 32 1603 16"), std::string::npos);
  EXPECT_NE(flat.find("positive 0 23 17"), std::string::npos);
  EXPECT_NE(flat.find("0.9456 0.9460 0.9456 0.9457"), std::string::npos) << text;
}

TEST(Report, RenderingIsDeterministic) {
  const EvalReport r = make_report(table2_matrix(), {"baseline", "d", "2024-01-01T00:00:00Z", 42, 0.3578});
  for (ReportFormat f : {ReportFormat::json, ReportFormat::csv, ReportFormat::text}) {
    EXPECT_EQ(render_report(r, f), render_report(r, f));
  }
}

TEST(Report, UnknownFormatRejected) {
  try {
    parse_report_format("xml");
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_argument);
  }
  EXPECT_EQ(parse_report_format("text-table"), ReportFormat::text);
}

TEST(Report, JsonRoundTripAndFields) {
  const EvalReport r = make_report(table2_matrix(), {"baseline(alpha=1)", "fixture", "2024-01-01T00:00:00Z", 7, 0.3578});
  const nlohmann::json j = report_to_json(r);
  EXPECT_EQ(j["weighted"]["accuracy"], 0.9456);
  EXPECT_EQ(j["weighted"]["weighted_precision"], 0.946);
  EXPECT_EQ(j["cross_rates"]["predicted_negative_given_actual_positive"], 0.0571);
  EXPECT_EQ(j["matrix"]["counts"][1][1], 1603);
  EXPECT_EQ(j["metadata"]["seed"], 7);

  const EvalReport back = report_from_json(j);
  EXPECT_EQ(back.matrix, r.matrix);
  EXPECT_EQ(back.metadata.classifier_id, "baseline(alpha=1)");
  EXPECT_EQ(back.metadata.seed, 7u);
  EXPECT_TRUE(check_report_consistency(back).empty());
}

TEST(Report, UndefinedRendersAsNullAndNa) {
  const EvalReport r = make_report(ConfusionMatrix3({{{3, 1, 0}, {2, 4, 0}, {0, 0, 0}}}));
  EXPECT_TRUE(report_to_json(r)["per_class"][2]["precision"].is_null());
  EXPECT_NE(render_report(r, ReportFormat::csv).find("positive,n/a,n/a,n/a,0,"), std::string::npos);
}

TEST(Report, ConsistencyCheckerFindsTamperedField) {
  EvalReport r = make_report(table2_matrix());
  r.weighted.weighted_f1 = 0.5;
  r.per_class[1].recall = 0.1;
  const auto bad = check_report_consistency(r);
  EXPECT_NE(std::find(bad.begin(), bad.end(), "weighted_f1"), bad.end());
  EXPECT_NE(std::find(bad.begin(), bad.end(), "neutral.recall"), bad.end());
}

TEST(Report, FourDecimalHalfEvenOnExactTies) {
  // Binary-exact ties: 0.03125 and 0.15625 end in 5 at the fifth decimal.
  EXPECT_EQ(format_metric(0.03125), "0.0312");
  EXPECT_EQ(format_metric(0.09375), "0.0938");
  EXPECT_EQ(format_metric(0.15625), "0.1562");
  EXPECT_EQ(format_metric(std::nullopt), "n/a");
}
