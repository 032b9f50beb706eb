#include <algorithm>
#include <charconv>
#include <cstdio>
#include <mutex>

#include "amscreen/error.hpp"
#include "amscreen/fileutil.hpp"
#include "amscreen/service.hpp"
#include "amscreen/textprep.hpp"
#include "amscreen/timeutil.hpp"
#include "amscreen/unicode.hpp"

namespace amscreen::service {

using nlohmann::json;

namespace {

constexpr std::string_view kCorpusFamily = "corpus";
constexpr std::string_view kLabelsFamily = "labels";
constexpr std::string_view kTriageFamily = "triage";
constexpr std::string_view kRunsFamily = "eval_runs";

constexpr std::size_t kMaxPageSize = 500;

// "screen-000042" -> 42; anything else -> 0.
std::uint64_t id_number(std::string_view id) {
  const auto dash = id.rfind('-');
  if (dash == std::string_view::npos) return 0;
  std::uint64_t n = 0;
  std::from_chars(id.data() + dash + 1, id.data() + id.size(), n);
  return n;
}

void require_text(const std::string& value, const char* what) {
  if (unicode::trim(value).empty()) {
    throw Error(ErrorKind::invalid_argument, std::string(what) + " must not be empty");
  }
}

std::vector<Fragment> labeled_only(const std::vector<Fragment>& fragments) {
  std::vector<Fragment> out;
  for (const Fragment& f : fragments) {
    if (f.label) out.push_back(f);
  }
  return out;
}

}  // namespace

ServiceCore::ServiceCore(ServiceOptions options) : options_(std::move(options)) {
  if (!options_.clock) options_.clock = [] { return now_utc(); };
  if (options_.data_dir) log_ = EventLog(*options_.data_dir);
  replay();
}

// ---------------------------------------------------------------------------
// Replay

void ServiceCore::apply_corpus_event(const json& event) {
  const std::string type = event.at("type").get<std::string>();
  if (type == "document") {
    dataset_ref(event.at("dataset").get<std::string>()).corpus.add_document(
        corpus::document_from_json(event.at("document")));
  } else if (type == "fragment") {
    const std::string dataset = event.at("dataset").get<std::string>();
    Fragment frag = corpus::fragment_from_json(event.at("fragment"));
    const std::string id = frag.id;
    dataset_ref(dataset).corpus.add_fragment(std::move(frag));
    fragment_dataset_.emplace(id, dataset);
    fragment_order_.push_back(id);
  } else if (type == "prediction") {
    const std::string id = event.at("fragment_id").get<std::string>();
    dataset_ref(fragment_dataset_.at(id)).corpus.set_prediction(id, corpus::prediction_from_json(event.at("prediction")));
  } else {
    throw Error(ErrorKind::persistence, "unknown corpus event '" + type + "'", type);
  }
}

void ServiceCore::replay() {
  try {
    for (const json& e : log_.replay(kCorpusFamily)) apply_corpus_event(e);
    for (const json& e : log_.replay(kLabelsFamily)) {
      corpus::LabelAuditEntry entry = corpus::audit_entry_from_json(e.at("entry"));
      dataset_ref(fragment_dataset_.at(entry.fragment_id)).corpus.set_label(entry.fragment_id, entry.new_label);
      audit_.append(std::move(entry));
    }
    for (const json& e : log_.replay(kTriageFamily)) {
      const std::string type = e.at("type").get<std::string>();
      if (type == "screen") {
        screen_counter_ = std::max(screen_counter_, id_number(e.at("run_id").get<std::string>()));
      } else if (type == "enqueue") {
        triage_.enqueue(triage_item_from_json(e.at("item")));
      } else if (type == "decision") {
        triage_.decide(e.at("id").get<std::string>(), parse_triage_decision(e.at("decision").get<std::string>()),
                       e.at("analyst").get<std::string>(), parse_timestamp(e.at("at").get<std::string>()));
      } else {
        throw Error(ErrorKind::persistence, "unknown triage event '" + type + "'", type);
      }
    }
    for (const json& e : log_.replay(kRunsFamily)) {
      const json& stored = e.at("record");
      EvalRunRecord record = eval_run_from_json(stored);
      run_counter_ = std::max(run_counter_, id_number(record.run_id));
      run_json_[record.run_id] = stored;
      runs_[record.run_id] = std::move(record);
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::persistence) throw;
    throw Error(ErrorKind::persistence, std::string("event log replay failed: ") + e.what(), e.detail());
  } catch (const std::exception& e) {
    throw Error(ErrorKind::persistence, std::string("event log replay failed: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Helpers

ServiceCore::Dataset& ServiceCore::dataset_ref(const std::string& id) { return datasets_[id]; }

const ServiceCore::Dataset& ServiceCore::dataset_at(const std::string& id) const {
  auto it = datasets_.find(id);
  if (it == datasets_.end()) throw Error(ErrorKind::not_found, "no dataset '" + id + "'", id);
  return it->second;
}

std::string ServiceCore::next_id(std::string_view prefix, std::uint64_t& counter) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "-%06llu", static_cast<unsigned long long>(++counter));
  return std::string(prefix) + buf;
}

std::unique_ptr<classify::Classifier> ServiceCore::make_classifier(evaluation::ClassifierKind kind, double alpha,
                                                                   std::span<const Fragment> training) const {
  switch (kind) {
    case evaluation::ClassifierKind::baseline:
      return std::make_unique<classify::BaselineClassifier>(classify::train_baseline(training, alpha));
    case evaluation::ClassifierKind::remote:
      if (!options_.remote) {
        throw Error(ErrorKind::invalid_argument, "remote classifier is not configured on this service");
      }
      return std::make_unique<classify::RemoteClassifier>(*options_.remote);
    case evaluation::ClassifierKind::replay:
      return std::make_unique<classify::ReplayClassifier>();
  }
  throw Error(ErrorKind::invalid_argument, "unknown classifier kind");
}

// ---------------------------------------------------------------------------
// Datasets and documents

void ServiceCore::import_corpus(const std::string& dataset_id, const corpus::Corpus& incoming) {
  require_text(dataset_id, "dataset id");
  std::unique_lock lock(mutex_);
  auto existing = datasets_.find(dataset_id);
  Dataset trial = existing == datasets_.end() ? Dataset{} : existing->second;
  std::vector<json> events;
  for (const Document& d : incoming.documents()) {
    trial.corpus.add_document(d);
    events.push_back({{"type", "document"}, {"dataset", dataset_id}, {"document", corpus::to_json(d)}});
  }
  for (const Fragment& f : incoming.fragments()) {
    if (fragment_dataset_.contains(f.id)) {
      throw Error(ErrorKind::duplicate_id, "fragment id '" + f.id + "' already exists", f.id);
    }
    trial.corpus.add_fragment(f);
    events.push_back({{"type", "fragment"}, {"dataset", dataset_id}, {"fragment", corpus::to_json(f)}});
  }
  log_.append_all(kCorpusFamily, events);
  for (const Fragment& f : incoming.fragments()) {
    fragment_dataset_.emplace(f.id, dataset_id);
    fragment_order_.push_back(f.id);
  }
  datasets_[dataset_id] = std::move(trial);
}

AddDocumentsResult ServiceCore::add_documents(const std::string& dataset_id, std::span<const DocumentInput> inputs) {
  require_text(dataset_id, "dataset id");
  // Cleaning and segmentation need no state.
  std::vector<std::pair<Document, std::vector<Fragment>>> prepared;
  AddDocumentsResult result;
  const Timestamp at = now();
  for (const DocumentInput& in : inputs) {
    Document doc;
    doc.id = in.id ? *in.id : "manual-" + hex_id(in.title.value_or("") + "\n" + in.text);
    doc.source = in.source;
    doc.origin_ref = in.origin_ref.empty() ? "api:" + doc.id : in.origin_ref;
    doc.fetched_at = in.fetched_at.value_or(at);
    doc.title = in.title;
    doc.raw_text = in.text;
    try {
      if (unicode::trim(doc.id).empty()) throw Error(ErrorKind::invalid_argument, "document id must not be empty");
      if (unicode::trim(doc.raw_text).empty()) {
        throw Error(ErrorKind::invalid_argument, "document '" + doc.id + "' has no text", doc.id);
      }
      Document cleaned = textprep::clean_document(doc);
      std::vector<Fragment> frags = textprep::segment_fragments(cleaned);
      prepared.emplace_back(std::move(cleaned), std::move(frags));
    } catch (const Error& e) {
      result.skipped.push_back({doc.id, e.kind(), e.what()});
    }
  }

  std::unique_lock lock(mutex_);
  auto existing = datasets_.find(dataset_id);
  Dataset trial = existing == datasets_.end() ? Dataset{} : existing->second;
  std::vector<json> events;
  for (auto& [doc, frags] : prepared) {
    const bool clash = trial.corpus.find_document(doc.id) != nullptr ||
                       std::any_of(frags.begin(), frags.end(),
                                   [&](const Fragment& f) { return fragment_dataset_.contains(f.id); });
    if (clash) {
      result.skipped.push_back({doc.id, ErrorKind::duplicate_id, "document '" + doc.id + "' already exists"});
      continue;
    }
    trial.corpus.add_document(doc);
    events.push_back({{"type", "document"}, {"dataset", dataset_id}, {"document", corpus::to_json(doc)}});
    for (const Fragment& f : frags) {
      trial.corpus.add_fragment(f);
      events.push_back({{"type", "fragment"}, {"dataset", dataset_id}, {"fragment", corpus::to_json(f)}});
    }
    result.documents.push_back(doc);
    result.fragments.insert(result.fragments.end(), frags.begin(), frags.end());
  }
  if (result.documents.empty()) return result;
  log_.append_all(kCorpusFamily, events);
  for (const Fragment& f : result.fragments) {
    fragment_dataset_.emplace(f.id, dataset_id);
    fragment_order_.push_back(f.id);
  }
  datasets_[dataset_id] = std::move(trial);
  return result;
}

std::vector<DatasetSummary> ServiceCore::datasets() const {
  std::shared_lock lock(mutex_);
  std::vector<DatasetSummary> out;
  for (const auto& [id, ds] : datasets_) {
    out.push_back({id, ds.corpus.documents().size(), ds.corpus.fragments().size(),
                   corpus::class_distribution(ds.corpus.fragments())});
  }
  return out;
}

std::vector<Fragment> ServiceCore::dataset_fragments(const std::string& dataset_id) const {
  std::shared_lock lock(mutex_);
  return dataset_at(dataset_id).corpus.fragments();
}

std::optional<Fragment> ServiceCore::fragment(std::string_view id) const {
  std::shared_lock lock(mutex_);
  auto it = fragment_dataset_.find(std::string(id));
  if (it == fragment_dataset_.end()) return std::nullopt;
  return *datasets_.at(it->second).corpus.find_fragment(id);
}

// ---------------------------------------------------------------------------
// Labeling

LabelingPage ServiceCore::labeling_queue(std::optional<std::string> dataset_id, std::optional<std::string> cursor,
                                         std::size_t limit, std::optional<LanguageTag> lang) const {
  if (limit == 0 || limit > kMaxPageSize) {
    throw Error(ErrorKind::invalid_argument, "limit must be between 1 and " + std::to_string(kMaxPageSize));
  }
  std::size_t start = 0;
  if (cursor && !cursor->empty()) {
    const auto [ptr, ec] = std::from_chars(cursor->data(), cursor->data() + cursor->size(), start);
    if (ec != std::errc{} || ptr != cursor->data() + cursor->size()) {
      throw Error(ErrorKind::invalid_argument, "malformed cursor '" + *cursor + "'", *cursor);
    }
  }
  std::shared_lock lock(mutex_);
  if (dataset_id) dataset_at(*dataset_id);
  LabelingPage page;
  for (std::size_t pos = start; pos < fragment_order_.size(); ++pos) {
    const std::string& id = fragment_order_[pos];
    const std::string& ds = fragment_dataset_.at(id);
    if (dataset_id && ds != *dataset_id) continue;
    const Fragment* f = datasets_.at(ds).corpus.find_fragment(id);
    if (f->label || (lang && f->lang != *lang)) continue;
    if (page.items.size() == limit) {
      page.next_cursor = std::to_string(pos);
      break;
    }
    page.items.push_back(*f);
  }
  return page;
}

Fragment ServiceCore::submit_label(const std::string& fragment_id, SentimentLabel label, const std::string& annotator) {
  require_text(annotator, "annotator");
  std::unique_lock lock(mutex_);
  auto it = fragment_dataset_.find(fragment_id);
  if (it == fragment_dataset_.end()) {
    throw Error(ErrorKind::not_found, "no fragment '" + fragment_id + "'", fragment_id);
  }
  corpus::Corpus& c = datasets_.at(it->second).corpus;
  corpus::LabelAuditEntry entry{fragment_id, c.find_fragment(fragment_id)->label, label, annotator, now()};
  log_.append(kLabelsFamily, json{{"type", "label"}, {"entry", corpus::to_json(entry)}});
  c.set_label(fragment_id, label);
  audit_.append(std::move(entry));
  return *c.find_fragment(fragment_id);
}

std::vector<corpus::LabelAuditEntry> ServiceCore::label_history(std::string_view fragment_id) const {
  std::shared_lock lock(mutex_);
  return audit_.entries_for(fragment_id);
}

// ---------------------------------------------------------------------------
// Screening and triage

ScreenResult ServiceCore::screen(const ScreenRequest& request) {
  if (request.fragment_ids.empty() && request.texts.empty()) {
    throw Error(ErrorKind::invalid_argument, "screen request needs fragment_ids or texts");
  }
  const std::string dataset_id = request.dataset_id.empty() ? std::string("manual") : request.dataset_id;

  // Inline texts are prepared before any state is touched.
  const Timestamp at = now();

  std::vector<Fragment> targets;
  std::vector<Fragment> training;
  {
    std::shared_lock lock(mutex_);
    for (const std::string& id : request.fragment_ids) {
      auto it = fragment_dataset_.find(id);
      if (it == fragment_dataset_.end()) throw Error(ErrorKind::not_found, "no fragment '" + id + "'", id);
      targets.push_back(*datasets_.at(it->second).corpus.find_fragment(id));
    }
    if (request.classifier == evaluation::ClassifierKind::baseline) {
      training = labeled_only(dataset_at(dataset_id).corpus.fragments());
    }
  }
  if (request.classifier == evaluation::ClassifierKind::baseline) {
    evaluation::require_all_classes(training, dataset_id);
  }
  // Built before committing anything so a training error leaves no trace.
  const std::unique_ptr<classify::Classifier> classifier =
      make_classifier(request.classifier, request.alpha, training);

  std::string run_id;
  {
    std::unique_lock lock(mutex_);
    run_id = next_id("screen", screen_counter_);
    std::vector<json> corpus_events;
    Dataset trial;
    if (auto existing = datasets_.find(dataset_id); !request.texts.empty() && existing != datasets_.end()) {
      trial = existing->second;
    }
    std::vector<Fragment> new_frags;
    for (std::size_t i = 0; i < request.texts.size(); ++i) {
      Document doc;
      doc.id = "inline-" + run_id + "-" + std::to_string(i);
      doc.source = DocumentSource::manual;
      doc.origin_ref = "screen:" + run_id;
      doc.fetched_at = at;
      doc.raw_text = request.texts[i];
      Document cleaned;
      try {
        require_text(doc.raw_text, "inline text");
        cleaned = textprep::clean_document(doc);
      } catch (const Error& e) {
        --screen_counter_;
        throw Error(ErrorKind::invalid_argument, "inline text " + std::to_string(i) + ": " + e.what(),
                    std::to_string(i));
      }
      std::vector<Fragment> frags = textprep::segment_fragments(cleaned);
      trial.corpus.add_document(cleaned);
      corpus_events.push_back({{"type", "document"}, {"dataset", dataset_id}, {"document", corpus::to_json(cleaned)}});
      for (Fragment& f : frags) {
        trial.corpus.add_fragment(f);
        corpus_events.push_back({{"type", "fragment"}, {"dataset", dataset_id}, {"fragment", corpus::to_json(f)}});
        new_frags.push_back(std::move(f));
      }
    }
    const json screen_event{{"type", "screen"},
                            {"run_id", run_id},
                            {"dataset", dataset_id},
                            {"at", format_timestamp(at)},
                            {"classifier", classifier->descriptor()},
                            {"count", targets.size() + new_frags.size()}};
    try {
      log_.append_all(kCorpusFamily, corpus_events);
      log_.append(kTriageFamily, screen_event);
    } catch (...) {
      --screen_counter_;
      throw;
    }
    if (!new_frags.empty()) {
      for (const Fragment& f : new_frags) {
        fragment_dataset_.emplace(f.id, dataset_id);
        fragment_order_.push_back(f.id);
      }
      datasets_[dataset_id] = std::move(trial);
    }
    targets.insert(targets.end(), new_frags.begin(), new_frags.end());
  }

  ScreenResult result;
  result.run_id = run_id;
  result.items = classify::screen_batch(*classifier, targets);

  {
    std::unique_lock lock(mutex_);
    std::vector<json> events;
    for (const classify::ScreenedItem& item : result.items) {
      if (!item.prediction || !fragment_dataset_.contains(item.fragment.id)) continue;
      events.push_back(
          {{"type", "prediction"}, {"fragment_id", item.fragment.id}, {"prediction", corpus::to_json(*item.prediction)}});
    }
    log_.append_all(kCorpusFamily, events);
    for (const classify::ScreenedItem& item : result.items) {
      if (!item.prediction) continue;
      auto it = fragment_dataset_.find(item.fragment.id);
      if (it != fragment_dataset_.end()) datasets_.at(it->second).corpus.set_prediction(item.fragment.id, item.prediction);
    }
  }
  result.triage = enqueue_for_review(run_id, result.items);
  return result;
}

std::vector<TriageItem> ServiceCore::enqueue_for_review(const std::string& run_id,
                                                        std::span<const classify::ScreenedItem> batch) {
  require_text(run_id, "run id");
  std::unique_lock lock(mutex_);
  const Timestamp at = now();
  std::vector<TriageItem> result;
  std::vector<TriageItem> fresh;
  std::vector<json> events;
  for (const classify::ScreenedItem& item : batch) {
    if (!item.prediction || item.prediction->label != SentimentLabel::negative) continue;
    const std::string id = triage_item_id(run_id, item.fragment.id);
    if (const TriageItem* existing = triage_.find(id)) {
      result.push_back(*existing);
      continue;
    }
    if (std::any_of(fresh.begin(), fresh.end(), [&](const TriageItem& t) { return t.id == id; })) continue;
    TriageItem t;
    t.id = id;
    t.fragment_id = item.fragment.id;
    t.run_id = run_id;
    t.text = item.fragment.text;
    t.prediction = *item.prediction;
    t.created_at = at;
    events.push_back({{"type", "enqueue"}, {"item", to_json(t)}});
    fresh.push_back(t);
    result.push_back(std::move(t));
  }
  log_.append_all(kTriageFamily, events);
  for (TriageItem& t : fresh) triage_.enqueue(std::move(t));
  return result;
}

TriageItem ServiceCore::record_triage_decision(const std::string& item_id, TriageDecision decision,
                                               const std::string& analyst) {
  require_text(analyst, "analyst");
  std::unique_lock lock(mutex_);
  triage_.check_decidable(item_id);
  const Timestamp at = now();
  log_.append(kTriageFamily, json{{"type", "decision"},
                                  {"id", item_id},
                                  {"decision", to_string(decision)},
                                  {"analyst", analyst},
                                  {"at", format_timestamp(at)}});
  return triage_.decide(item_id, decision, analyst, at);
}

std::vector<TriageItem> ServiceCore::triage_queue(std::optional<TriageStatus> status) const {
  std::shared_lock lock(mutex_);
  return triage_.list(status);
}

// ---------------------------------------------------------------------------
// Evaluation

EvalRunRecord ServiceCore::run_evaluation(const EvalRunRequest& request) {
  std::vector<Fragment> fragments;
  {
    std::shared_lock lock(mutex_);
    fragments = dataset_at(request.dataset_id).corpus.fragments();
  }
  evaluation::ClassifierSpec spec;
  spec.kind = request.classifier;
  spec.alpha = request.alpha;
  if (request.classifier == evaluation::ClassifierKind::remote) {
    if (!options_.remote) throw Error(ErrorKind::invalid_argument, "remote classifier is not configured on this service");
    spec.remote = options_.remote;
  }
  const Timestamp at = now();
  metrics::RunMetadata metadata;
  metadata.dataset_id = request.dataset_id;
  metadata.created_at = format_timestamp(at);
  evaluation::EvaluationResult result =
      evaluation::run_evaluation(fragments, spec, request.fraction, request.seed, std::move(metadata));

  EvalRunRecord record;
  record.dataset_id = request.dataset_id;
  record.classifier = result.classifier_descriptor;
  record.seed = request.seed;
  record.fraction = request.fraction;
  record.pairs = std::move(result.pairs);
  record.failures = std::move(result.failures);
  record.partial = result.partial;
  record.report = std::move(result.report);
  record.created_at = at;

  std::unique_lock lock(mutex_);
  record.run_id = next_id("run", run_counter_);
  json stored = to_json(record);
  try {
    log_.append(kRunsFamily, json{{"type", "run"}, {"record", stored}});
  } catch (...) {
    --run_counter_;
    throw;
  }
  run_json_[record.run_id] = std::move(stored);
  runs_[record.run_id] = record;
  return record;
}

std::optional<EvalRunRecord> ServiceCore::eval_run(std::string_view run_id) const {
  std::shared_lock lock(mutex_);
  auto it = runs_.find(std::string(run_id));
  if (it == runs_.end()) return std::nullopt;
  return it->second;
}

std::vector<EvalRunRecord> ServiceCore::eval_runs() const {
  std::shared_lock lock(mutex_);
  std::vector<EvalRunRecord> out;
  for (const auto& [id, r] : runs_) out.push_back(r);
  return out;
}

std::vector<std::string> ServiceCore::check_consistency(std::string_view run_id) const {
  std::shared_lock lock(mutex_);
  auto it = run_json_.find(std::string(run_id));
  if (it == run_json_.end()) {
    throw Error(ErrorKind::not_found, "no eval run '" + std::string(run_id) + "'", std::string(run_id));
  }
  std::vector<std::string> mismatches = check_run_consistency(it->second);
  for (std::string& m : check_run_consistency(runs_.at(it->first))) mismatches.push_back(std::move(m));
  return mismatches;
}

HealthInfo ServiceCore::health() const {
  std::shared_lock lock(mutex_);
  HealthInfo h;
  h.datasets = datasets_.size();
  h.fragments = fragment_order_.size();
  h.triage_pending = triage_.list(TriageStatus::pending).size();
  h.eval_runs = runs_.size();
  h.persistent = log_.persistent();
  return h;
}

}  // namespace amscreen::service
