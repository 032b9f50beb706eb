#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "amscreen/classify.hpp"
#include "amscreen/corpus.hpp"
#include "amscreen/evaluation.hpp"
#include "amscreen/metrics.hpp"
#include "amscreen/types.hpp"

namespace amscreen::service {

using Clock = std::function<Timestamp()>;

// ---------------------------------------------------------------------------
// Triage

enum class TriageStatus { pending, escalated, dismissed };
enum class TriageDecision { escalate, dismiss };

std::string_view to_string(TriageStatus status);
std::string_view to_string(TriageDecision decision);
TriageStatus parse_triage_status(std::string_view name);
TriageDecision parse_triage_decision(std::string_view name);

struct TriageItem {
  std::string id;
  std::string fragment_id;
  std::string run_id;
  std::string text;  // fragment text when enqueued
  Prediction prediction;
  TriageStatus status = TriageStatus::pending;
  std::optional<std::string> decided_by;
  std::optional<Timestamp> decided_at;
  Timestamp created_at{};

  friend bool operator==(const TriageItem&, const TriageItem&) = default;
};

// decided_by/decided_at present exactly when the item is no longer pending.
bool is_consistent(const TriageItem& item);

// Deterministic per (run, fragment), which is what makes enqueueing idempotent.
std::string triage_item_id(std::string_view run_id, std::string_view fragment_id);

nlohmann::json to_json(const TriageItem& item);
TriageItem triage_item_from_json(const nlohmann::json& j);

// In-memory queue, kept in enqueue order. No persistence and no locking.
class TriageQueue {
 public:
  // Returns the stored item and whether it was new.
  std::pair<TriageItem, bool> enqueue(TriageItem item);

  // Throws Error(not_found) or Error(conflict) without changing anything.
  void check_decidable(std::string_view item_id) const;
  TriageItem decide(std::string_view item_id, TriageDecision decision, std::string analyst, Timestamp at);

  const TriageItem* find(std::string_view item_id) const;
  bool contains(std::string_view item_id) const { return find(item_id) != nullptr; }
  std::vector<TriageItem> list(std::optional<TriageStatus> status = std::nullopt) const;
  std::size_t size() const noexcept { return items_.size(); }

 private:
  std::vector<TriageItem> items_;
  std::unordered_map<std::string, std::size_t> index_;
};

// ---------------------------------------------------------------------------
// Evaluation runs

struct EvalRunRecord {
  std::string run_id;
  std::string dataset_id;
  std::string classifier;  // descriptor
  std::uint64_t seed = 0;
  double fraction = 0.0;
  std::vector<evaluation::PairRecord> pairs;
  std::vector<evaluation::FailedItem> failures;
  bool partial = false;
  metrics::EvalReport report;
  Timestamp created_at{};
};

nlohmann::json to_json(const EvalRunRecord& record);
EvalRunRecord eval_run_from_json(const nlohmann::json& j);

// Rebuilds the report from the stored pairs and lists every field that
// disagrees with the stored one. Empty means consistent.
std::vector<std::string> check_run_consistency(const EvalRunRecord& record);
// Same check on a record as persisted: the stored report JSON is compared
// against one rebuilt from the stored pairs. Returns JSON-pointer paths.
std::vector<std::string> check_run_consistency(const nlohmann::json& stored_record);

// ---------------------------------------------------------------------------
// Persistence

// One append-only JSONL file per entity family under `dir`. Without a
// directory the log is memory-only (nothing survives the process).
class EventLog {
 public:
  EventLog() = default;
  explicit EventLog(std::filesystem::path dir);

  bool persistent() const noexcept { return dir_.has_value(); }

  // All events are written with one append; throws Error(persistence).
  void append_all(std::string_view family, std::span<const nlohmann::json> events);
  void append(std::string_view family, const nlohmann::json& event);

  // A final line without its newline is a torn write and is ignored (and cut
  // off by the next append); any other malformed line throws Error(persistence).
  std::vector<nlohmann::json> replay(std::string_view family) const;

  std::filesystem::path family_path(std::string_view family) const;

 private:
  std::optional<std::filesystem::path> dir_;
};

// ---------------------------------------------------------------------------
// Core

struct ServiceOptions {
  std::optional<std::filesystem::path> data_dir;
  std::optional<classify::RemoteAdapterConfig> remote;
  Clock clock;  // defaults to now_utc
};

struct DocumentInput {
  std::optional<std::string> id;
  std::optional<std::string> title;
  std::string text;
  DocumentSource source = DocumentSource::manual;
  std::string origin_ref;
  std::optional<Timestamp> fetched_at;
};

struct SkippedDocument {
  std::string id;
  ErrorKind kind;
  std::string message;
};

struct AddDocumentsResult {
  std::vector<Document> documents;
  std::vector<Fragment> fragments;
  std::vector<SkippedDocument> skipped;
};

struct ScreenRequest {
  std::string dataset_id;
  std::vector<std::string> fragment_ids;
  std::vector<std::string> texts;  // become one manual document
  evaluation::ClassifierKind classifier = evaluation::ClassifierKind::baseline;
  double alpha = classify::kDefaultAlpha;
};

struct ScreenResult {
  std::string run_id;
  std::vector<classify::ScreenedItem> items;
  std::vector<TriageItem> triage;
};

struct LabelingPage {
  std::vector<Fragment> items;
  std::optional<std::string> next_cursor;
};

struct EvalRunRequest {
  std::string dataset_id;
  evaluation::ClassifierKind classifier = evaluation::ClassifierKind::baseline;
  double fraction = 0.3578;
  std::uint64_t seed = 42;
  double alpha = classify::kDefaultAlpha;
};

struct DatasetSummary {
  std::string id;
  std::size_t documents = 0;
  std::size_t fragments = 0;
  corpus::ClassDistribution distribution;
};

struct HealthInfo {
  std::size_t datasets = 0;
  std::size_t fragments = 0;
  std::size_t triage_pending = 0;
  std::size_t eval_runs = 0;
  bool persistent = false;
};

// Mutations hold the writer lock; reads share it and return copies, so every
// result reflects one consistent state. Classification runs outside the lock.
class ServiceCore {
 public:
  explicit ServiceCore(ServiceOptions options = {});

  // Datasets and documents
  void import_corpus(const std::string& dataset_id, const corpus::Corpus& corpus);
  AddDocumentsResult add_documents(const std::string& dataset_id, std::span<const DocumentInput> docs);
  std::vector<DatasetSummary> datasets() const;
  std::vector<Fragment> dataset_fragments(const std::string& dataset_id) const;
  std::optional<Fragment> fragment(std::string_view id) const;

  // Labeling
  LabelingPage labeling_queue(std::optional<std::string> dataset_id, std::optional<std::string> cursor,
                              std::size_t limit, std::optional<LanguageTag> lang = std::nullopt) const;
  Fragment submit_label(const std::string& fragment_id, SentimentLabel label, const std::string& annotator);
  std::vector<corpus::LabelAuditEntry> label_history(std::string_view fragment_id) const;

  // Screening and triage
  ScreenResult screen(const ScreenRequest& request);
  std::vector<TriageItem> enqueue_for_review(const std::string& run_id, std::span<const classify::ScreenedItem> batch);
  TriageItem record_triage_decision(const std::string& item_id, TriageDecision decision, const std::string& analyst);
  std::vector<TriageItem> triage_queue(std::optional<TriageStatus> status) const;

  // Evaluation
  EvalRunRecord run_evaluation(const EvalRunRequest& request);
  std::optional<EvalRunRecord> eval_run(std::string_view run_id) const;
  std::vector<EvalRunRecord> eval_runs() const;
  std::vector<std::string> check_consistency(std::string_view run_id) const;

  HealthInfo health() const;

 private:
  struct Dataset {
    corpus::Corpus corpus;
  };

  void replay();
  void apply_corpus_event(const nlohmann::json& event);
  Dataset& dataset_ref(const std::string& id);
  const Dataset& dataset_at(const std::string& id) const;
  std::unique_ptr<classify::Classifier> make_classifier(evaluation::ClassifierKind kind, double alpha,
                                                        std::span<const Fragment> training) const;
  std::string next_id(std::string_view prefix, std::uint64_t& counter);
  Timestamp now() const { return options_.clock(); }

  ServiceOptions options_;
  EventLog log_;

  mutable std::shared_mutex mutex_;
  std::map<std::string, Dataset> datasets_;
  std::unordered_map<std::string, std::string> fragment_dataset_;
  // Global insertion order of fragments; the labeling queue walks it.
  std::vector<std::string> fragment_order_;
  corpus::LabelAuditTrail audit_;
  TriageQueue triage_;
  std::map<std::string, EvalRunRecord> runs_;
  std::map<std::string, nlohmann::json> run_json_;  // as persisted
  std::uint64_t screen_counter_ = 0;
  std::uint64_t run_counter_ = 0;
};

// ---------------------------------------------------------------------------
// HTTP

struct HttpOptions {
  std::optional<std::string> bearer_token;
  std::optional<std::filesystem::path> static_dir;
  bool allow_cors = true;
};

// Maps an error kind to its HTTP status (404, 409, 422, 500, 502, 503).
int http_status_for(ErrorKind kind);

class HttpServer {
 public:
  HttpServer(ServiceCore& core, HttpOptions options = {});
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds; port 0 picks a free port. Returns the bound port or throws Error(io).
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void run();
  void stop();
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace amscreen::service
