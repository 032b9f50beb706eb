#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "amscreen/classify.hpp"
#include "amscreen/corpus.hpp"
#include "amscreen/metrics.hpp"

namespace amscreen::evaluation {

enum class ClassifierKind { baseline, remote, replay };

std::string_view to_string(ClassifierKind kind);
ClassifierKind parse_classifier_kind(std::string_view name);

struct ClassifierSpec {
  ClassifierKind kind = ClassifierKind::baseline;
  double alpha = classify::kDefaultAlpha;
  std::optional<classify::RemoteAdapterConfig> remote;  // required for remote
};

struct PairRecord {
  std::string fragment_id;
  SentimentLabel predicted;
  SentimentLabel actual;

  friend bool operator==(const PairRecord&, const PairRecord&) = default;
};

struct FailedItem {
  std::string fragment_id;
  classify::ItemError error;
};

struct EvaluationResult {
  corpus::DatasetSplit split;
  std::string classifier_descriptor;
  std::vector<PairRecord> pairs;
  std::vector<FailedItem> failures;
  bool partial = false;  // some test items could not be classified
  metrics::EvalReport report;
};

std::vector<metrics::PredictionPair> to_prediction_pairs(std::span<const PairRecord> pairs);

// Throws Error(training) with the class distribution in the message when the
// labeled fragments do not cover all three classes.
void require_all_classes(std::span<const Fragment> fragments, std::string_view dataset_id);

// Stratified split, then train (baseline only) on the train part, classify
// the test part and build the report. Deterministic for the baseline.
EvaluationResult run_evaluation(std::span<const Fragment> fragments, const ClassifierSpec& spec,
                                double test_fraction, std::uint64_t seed, metrics::RunMetadata metadata);

}  // namespace amscreen::evaluation
