#include "amscreen/metrics.hpp"

namespace amscreen::metrics {

namespace {

Metric ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

std::uint64_t ConfusionMatrix3::row_sum(SentimentLabel predicted) const {
  const auto& row = counts_[index_of(predicted)];
  return row[0] + row[1] + row[2];
}

std::uint64_t ConfusionMatrix3::column_sum(SentimentLabel actual) const {
  const std::size_t a = index_of(actual);
  return counts_[0][a] + counts_[1][a] + counts_[2][a];
}

std::uint64_t ConfusionMatrix3::trace() const { return counts_[0][0] + counts_[1][1] + counts_[2][2]; }

std::uint64_t ConfusionMatrix3::total() const {
  std::uint64_t sum = 0;
  for (const auto& row : counts_) sum += row[0] + row[1] + row[2];
  return sum;
}

ConfusionMatrix3 build_confusion_matrix(std::span<const PredictionPair> pairs) {
  ConfusionMatrix3 m;
  for (const PredictionPair& p : pairs) m.add(p.predicted, p.actual);
  return m;
}

std::array<PerClassMetrics, kNumClasses> per_class_metrics(const ConfusionMatrix3& m) {
  std::array<PerClassMetrics, kNumClasses> out;
  for (SentimentLabel c : kAllLabels) {
    const std::uint64_t tp = m.at(c, c);
    const std::uint64_t fp = m.row_sum(c) - tp;
    const std::uint64_t fn = m.column_sum(c) - tp;
    PerClassMetrics& pc = out[index_of(c)];
    pc.label = c;
    pc.support = m.column_sum(c);
    pc.precision = ratio(tp, tp + fp);
    pc.recall = ratio(tp, tp + fn);
    if (pc.precision && pc.recall && *pc.precision + *pc.recall > 0.0) {
      pc.f1 = 2.0 * (*pc.precision * *pc.recall) / (*pc.precision + *pc.recall);
    }
  }
  return out;
}

Metric overall_accuracy(const ConfusionMatrix3& m) { return ratio(m.trace(), m.total()); }

WeightedMetrics weighted_metrics(const ConfusionMatrix3& m) {
  WeightedMetrics w;
  const std::uint64_t total = m.total();
  const auto per_class = per_class_metrics(m);
  for (const PerClassMetrics& pc : per_class) {
    w.has_undefined_classes = w.has_undefined_classes || !pc.precision || !pc.recall || !pc.f1;
  }
  if (total == 0) return w;

  const double denom = static_cast<double>(total);
  double precision_sum = 0.0;
  double f1_sum = 0.0;
  for (const PerClassMetrics& pc : per_class) {
    const double support = static_cast<double>(pc.support);
    precision_sum += pc.precision.value_or(0.0) * support;
    f1_sum += pc.f1.value_or(0.0) * support;
  }
  w.weighted_precision = precision_sum / denom;
  w.weighted_f1 = f1_sum / denom;
  // recall_c * support_c is exactly TP_c whenever recall_c is defined, and a
  // class with undefined recall has zero support, so the sum is the trace.
  w.weighted_recall = static_cast<double>(m.trace()) / denom;
  w.accuracy = overall_accuracy(m);
  return w;
}

CrossRates cross_misclassification_rates(const ConfusionMatrix3& m) {
  using enum SentimentLabel;
  return CrossRates{ratio(m.at(positive, negative), m.column_sum(negative)),
                    ratio(m.at(negative, positive), m.column_sum(positive))};
}

EvalReport make_report(const ConfusionMatrix3& matrix, RunMetadata metadata) {
  return EvalReport{matrix, per_class_metrics(matrix), weighted_metrics(matrix),
                    cross_misclassification_rates(matrix), std::move(metadata)};
}

std::vector<std::string> check_report_consistency(const EvalReport& report) {
  std::vector<std::string> mismatches;
  const EvalReport fresh = make_report(report.matrix, report.metadata);
  auto check = [&](const std::string& field, const Metric& stored, const Metric& recomputed) {
    if (stored != recomputed) mismatches.push_back(field);
  };
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    const std::string name(to_string(kAllLabels[i]));
    const auto& s = report.per_class[i];
    const auto& r = fresh.per_class[i];
    if (s.label != r.label) mismatches.push_back(name + ".label");
    check(name + ".precision", s.precision, r.precision);
    check(name + ".recall", s.recall, r.recall);
    check(name + ".f1", s.f1, r.f1);
    if (s.support != r.support) mismatches.push_back(name + ".support");
  }
  check("weighted_precision", report.weighted.weighted_precision, fresh.weighted.weighted_precision);
  check("weighted_recall", report.weighted.weighted_recall, fresh.weighted.weighted_recall);
  check("weighted_f1", report.weighted.weighted_f1, fresh.weighted.weighted_f1);
  check("accuracy", report.weighted.accuracy, fresh.weighted.accuracy);
  if (report.weighted.has_undefined_classes != fresh.weighted.has_undefined_classes) {
    mismatches.push_back("has_undefined_classes");
  }
  check("cross_rates.positive_given_negative", report.cross_rates.predicted_positive_given_actual_negative,
        fresh.cross_rates.predicted_positive_given_actual_negative);
  check("cross_rates.negative_given_positive", report.cross_rates.predicted_negative_given_actual_positive,
        fresh.cross_rates.predicted_negative_given_actual_positive);
  return mismatches;
}

}  // namespace amscreen::metrics
