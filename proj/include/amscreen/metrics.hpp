#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "amscreen/types.hpp"

namespace amscreen::metrics {

// A metric whose denominator was zero is undefined (nullopt), never 0 or NaN.
using Metric = std::optional<double>;

// 3x3 counts. Rows are the predicted class, columns the actual class, both in
// canonical order (negative, neutral, positive).
class ConfusionMatrix3 {
 public:
  using Counts = std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses>;

  ConfusionMatrix3() = default;
  explicit ConfusionMatrix3(const Counts& counts) : counts_(counts) {}

  void add(SentimentLabel predicted, SentimentLabel actual, std::uint64_t n = 1) {
    counts_[index_of(predicted)][index_of(actual)] += n;
  }

  std::uint64_t at(SentimentLabel predicted, SentimentLabel actual) const {
    return counts_[index_of(predicted)][index_of(actual)];
  }
  std::uint64_t row_sum(SentimentLabel predicted) const;
  std::uint64_t column_sum(SentimentLabel actual) const;
  std::uint64_t trace() const;
  std::uint64_t total() const;
  const Counts& counts() const noexcept { return counts_; }

  friend bool operator==(const ConfusionMatrix3&, const ConfusionMatrix3&) = default;

 private:
  Counts counts_{};
};

struct PredictionPair {
  SentimentLabel predicted;
  SentimentLabel actual;
};

ConfusionMatrix3 build_confusion_matrix(std::span<const PredictionPair> pairs);

struct PerClassMetrics {
  SentimentLabel label = SentimentLabel::negative;
  Metric precision;
  Metric recall;
  Metric f1;
  std::uint64_t support = 0;  // actual-class column sum
};

// One-vs-rest: TP = cell[c][c], FP = row c - TP, FN = column c - TP.
std::array<PerClassMetrics, kNumClasses> per_class_metrics(const ConfusionMatrix3& m);

// trace / total.
Metric overall_accuracy(const ConfusionMatrix3& m);

struct WeightedMetrics {
  Metric weighted_precision;
  Metric weighted_recall;
  Metric weighted_f1;
  Metric accuracy;
  // Some per-class value was undefined and entered its average as 0.
  bool has_undefined_classes = false;
};

// Support-weighted averages of the per-class values.
WeightedMetrics weighted_metrics(const ConfusionMatrix3& m);

struct CrossRates {
  Metric predicted_positive_given_actual_negative;
  Metric predicted_negative_given_actual_positive;
};

CrossRates cross_misclassification_rates(const ConfusionMatrix3& m);

struct RunMetadata {
  std::string classifier_id;
  std::string dataset_id;
  std::string created_at;
  std::optional<std::uint64_t> seed;
  std::optional<double> test_fraction;
};

struct EvalReport {
  ConfusionMatrix3 matrix;
  std::array<PerClassMetrics, kNumClasses> per_class;
  WeightedMetrics weighted;
  CrossRates cross_rates;
  RunMetadata metadata;
};

EvalReport make_report(const ConfusionMatrix3& matrix, RunMetadata metadata = {});

// Recomputes every derived number from the matrix and lists the fields that
// disagree; empty means consistent.
std::vector<std::string> check_report_consistency(const EvalReport& report);

enum class ReportFormat { json, csv, text };

// Throws Error(invalid_argument) for anything but json, csv, text/text-table.
ReportFormat parse_report_format(std::string_view name);

// Four decimals; exact binary ties round half to even. Undefined -> "n/a".
std::string format_metric(const Metric& value);

nlohmann::json report_to_json(const EvalReport& report);
// Rebuilds a report from the "matrix" and "metadata" members of a JSON report.
EvalReport report_from_json(const nlohmann::json& j);

std::string render_report(const EvalReport& report, ReportFormat format);

}  // namespace amscreen::metrics
