#include "amscreen/evaluation.hpp"

#include <memory>

namespace amscreen::evaluation {

std::string_view to_string(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::baseline: return "baseline";
    case ClassifierKind::remote: return "remote";
    case ClassifierKind::replay: return "replay";
  }
  return "baseline";
}

ClassifierKind parse_classifier_kind(std::string_view name) {
  if (name == "baseline") return ClassifierKind::baseline;
  if (name == "remote") return ClassifierKind::remote;
  if (name == "replay") return ClassifierKind::replay;
  throw Error(ErrorKind::invalid_argument,
              "unknown classifier '" + std::string(name) + "' (expected baseline, remote or replay)",
              std::string(name));
}

std::vector<metrics::PredictionPair> to_prediction_pairs(std::span<const PairRecord> pairs) {
  std::vector<metrics::PredictionPair> out;
  out.reserve(pairs.size());
  for (const PairRecord& p : pairs) out.push_back({p.predicted, p.actual});
  return out;
}

void require_all_classes(std::span<const Fragment> fragments, std::string_view dataset_id) {
  const corpus::ClassDistribution dist = corpus::class_distribution(fragments);
  std::string missing;
  for (SentimentLabel label : kAllLabels) {
    if (dist.count(label) == 0) missing += (missing.empty() ? "" : ", ") + std::string(to_string(label));
  }
  if (missing.empty()) return;
  std::string diagnostics = "negative=" + std::to_string(dist.count(SentimentLabel::negative)) +
                            " neutral=" + std::to_string(dist.count(SentimentLabel::neutral)) +
                            " positive=" + std::to_string(dist.count(SentimentLabel::positive)) +
                            " unlabeled=" + std::to_string(dist.unlabeled);
  throw Error(ErrorKind::training,
              "dataset '" + std::string(dataset_id) + "' has no labeled fragments of class " + missing + " (" +
                  diagnostics + ")",
              diagnostics);
}

EvaluationResult run_evaluation(std::span<const Fragment> fragments, const ClassifierSpec& spec,
                                double test_fraction, std::uint64_t seed, metrics::RunMetadata metadata) {
  require_all_classes(fragments, metadata.dataset_id);

  EvaluationResult result;
  result.split = corpus::stratified_split(fragments, test_fraction, seed);

  std::vector<Fragment> train;
  std::vector<Fragment> test;
  for (const Fragment& f : fragments) {
    if (!f.label) continue;
    if (result.split.test_ids.contains(f.id)) {
      test.push_back(f);
    } else {
      train.push_back(f);
    }
  }

  std::unique_ptr<classify::Classifier> classifier;
  switch (spec.kind) {
    case ClassifierKind::baseline:
      classifier = std::make_unique<classify::BaselineClassifier>(classify::train_baseline(train, spec.alpha));
      break;
    case ClassifierKind::remote:
      if (!spec.remote) throw Error(ErrorKind::invalid_argument, "remote classifier requested without configuration");
      classifier = std::make_unique<classify::RemoteClassifier>(*spec.remote);
      break;
    case ClassifierKind::replay:
      classifier = std::make_unique<classify::ReplayClassifier>();
      break;
  }
  result.classifier_descriptor = classifier->descriptor();

  for (classify::ScreenedItem& item : classify::screen_batch(*classifier, test)) {
    if (item.prediction) {
      result.pairs.push_back({item.fragment.id, item.prediction->label, *item.fragment.label});
    } else {
      result.failures.push_back({item.fragment.id, item.error.value_or(classify::ItemError{})});
    }
  }
  result.partial = !result.failures.empty();

  metadata.classifier_id = result.classifier_descriptor;
  metadata.seed = seed;
  metadata.test_fraction = test_fraction;
  const auto pairs = to_prediction_pairs(result.pairs);
  result.report = metrics::make_report(metrics::build_confusion_matrix(pairs), std::move(metadata));
  return result;
}

}  // namespace amscreen::evaluation
