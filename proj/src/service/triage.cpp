#include <algorithm>

#include "amscreen/error.hpp"
#include "amscreen/fileutil.hpp"
#include "amscreen/service.hpp"
#include "amscreen/timeutil.hpp"

namespace amscreen::service {

using nlohmann::json;

std::string_view to_string(TriageStatus status) {
  switch (status) {
    case TriageStatus::pending: return "pending";
    case TriageStatus::escalated: return "escalated";
    case TriageStatus::dismissed: return "dismissed";
  }
  return "pending";
}

std::string_view to_string(TriageDecision decision) {
  return decision == TriageDecision::escalate ? "escalate" : "dismiss";
}

TriageStatus parse_triage_status(std::string_view name) {
  if (name == "pending") return TriageStatus::pending;
  if (name == "escalated") return TriageStatus::escalated;
  if (name == "dismissed") return TriageStatus::dismissed;
  throw Error(ErrorKind::invalid_argument,
              "unknown triage status '" + std::string(name) + "' (expected pending, escalated or dismissed)",
              std::string(name));
}

TriageDecision parse_triage_decision(std::string_view name) {
  if (name == "escalate") return TriageDecision::escalate;
  if (name == "dismiss") return TriageDecision::dismiss;
  throw Error(ErrorKind::invalid_argument,
              "unknown triage decision '" + std::string(name) + "' (expected escalate or dismiss)",
              std::string(name));
}

bool is_consistent(const TriageItem& item) {
  const bool decided = item.status != TriageStatus::pending;
  return decided == item.decided_by.has_value() && decided == item.decided_at.has_value();
}

std::string triage_item_id(std::string_view run_id, std::string_view fragment_id) {
  std::string key(run_id);
  key += '\n';
  key += fragment_id;
  return "tri-" + hex_id(key);
}

json to_json(const TriageItem& item) {
  json j = {
      {"id", item.id},
      {"fragment_id", item.fragment_id},
      {"run_id", item.run_id},
      {"text", item.text},
      {"prediction", corpus::to_json(item.prediction)},
      {"status", to_string(item.status)},
      {"decided_by", nullptr},
      {"decided_at", nullptr},
      {"created_at", format_timestamp(item.created_at)},
  };
  if (item.decided_by) j["decided_by"] = *item.decided_by;
  if (item.decided_at) j["decided_at"] = format_timestamp(*item.decided_at);
  return j;
}

TriageItem triage_item_from_json(const json& j) {
  try {
    TriageItem item;
    item.id = j.at("id").get<std::string>();
    item.fragment_id = j.at("fragment_id").get<std::string>();
    item.run_id = j.at("run_id").get<std::string>();
    item.text = j.value("text", std::string());
    item.prediction = corpus::prediction_from_json(j.at("prediction"));
    item.status = parse_triage_status(j.at("status").get<std::string>());
    if (auto it = j.find("decided_by"); it != j.end() && !it->is_null()) item.decided_by = it->get<std::string>();
    if (auto it = j.find("decided_at"); it != j.end() && !it->is_null()) {
      item.decided_at = parse_timestamp(it->get<std::string>());
    }
    item.created_at = parse_timestamp(j.at("created_at").get<std::string>());
    return item;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, std::string("malformed triage item: ") + e.what());
  }
}

std::pair<TriageItem, bool> TriageQueue::enqueue(TriageItem item) {
  if (const TriageItem* existing = find(item.id)) return {*existing, false};
  if (!is_consistent(item)) {
    throw Error(ErrorKind::invalid_argument, "triage item '" + item.id + "' has inconsistent decision fields", item.id);
  }
  index_.emplace(item.id, items_.size());
  items_.push_back(std::move(item));
  return {items_.back(), true};
}

void TriageQueue::check_decidable(std::string_view item_id) const {
  const TriageItem* item = find(item_id);
  if (!item) {
    throw Error(ErrorKind::not_found, "no triage item '" + std::string(item_id) + "'", std::string(item_id));
  }
  if (item->status != TriageStatus::pending) {
    throw Error(ErrorKind::conflict,
                "triage item '" + item->id + "' was already " + std::string(to_string(item->status)) + " by " +
                    item->decided_by.value_or("?"),
                item->id);
  }
}

TriageItem TriageQueue::decide(std::string_view item_id, TriageDecision decision, std::string analyst, Timestamp at) {
  check_decidable(item_id);
  TriageItem& item = items_[index_.find(std::string(item_id))->second];
  item.status = decision == TriageDecision::escalate ? TriageStatus::escalated : TriageStatus::dismissed;
  item.decided_by = std::move(analyst);
  item.decided_at = at;
  return item;
}

const TriageItem* TriageQueue::find(std::string_view item_id) const {
  auto it = index_.find(std::string(item_id));
  return it == index_.end() ? nullptr : &items_[it->second];
}

std::vector<TriageItem> TriageQueue::list(std::optional<TriageStatus> status) const {
  std::vector<TriageItem> out;
  for (const TriageItem& item : items_) {
    if (!status || item.status == *status) out.push_back(item);
  }
  return out;
}

// ---------------------------------------------------------------------------

json to_json(const EvalRunRecord& record) {
  json pairs = json::array();
  for (const auto& p : record.pairs) {
    pairs.push_back({{"fragment_id", p.fragment_id}, {"predicted", to_string(p.predicted)}, {"actual", to_string(p.actual)}});
  }
  json failures = json::array();
  for (const auto& f : record.failures) {
    failures.push_back({{"fragment_id", f.fragment_id},
                        {"code", to_string(f.error.kind)},
                        {"message", f.error.message},
                        {"detail", f.error.detail}});
  }
  return {
      {"run_id", record.run_id},
      {"dataset_id", record.dataset_id},
      {"classifier", record.classifier},
      {"seed", record.seed},
      {"fraction", record.fraction},
      {"partial", record.partial},
      {"created_at", format_timestamp(record.created_at)},
      {"pairs", std::move(pairs)},
      {"failures", std::move(failures)},
      {"report", metrics::report_to_json(record.report)},
  };
}

namespace {

ErrorKind parse_error_kind(std::string_view name) {
  for (int k = 0; k <= static_cast<int>(ErrorKind::persistence); ++k) {
    if (to_string(static_cast<ErrorKind>(k)) == name) return static_cast<ErrorKind>(k);
  }
  return ErrorKind::unavailable;
}

std::vector<evaluation::PairRecord> pairs_from_json(const json& j) {
  std::vector<evaluation::PairRecord> pairs;
  for (const json& p : j) {
    pairs.push_back({p.at("fragment_id").get<std::string>(), parse_label(p.at("predicted").get<std::string>()),
                     parse_label(p.at("actual").get<std::string>())});
  }
  return pairs;
}

metrics::ConfusionMatrix3 matrix_of(std::span<const evaluation::PairRecord> pairs) {
  const auto plain = evaluation::to_prediction_pairs(pairs);
  return metrics::build_confusion_matrix(plain);
}

}  // namespace

EvalRunRecord eval_run_from_json(const json& j) {
  try {
    EvalRunRecord r;
    r.run_id = j.at("run_id").get<std::string>();
    r.dataset_id = j.at("dataset_id").get<std::string>();
    r.classifier = j.at("classifier").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.fraction = j.at("fraction").get<double>();
    r.partial = j.value("partial", false);
    r.created_at = parse_timestamp(j.at("created_at").get<std::string>());
    r.pairs = pairs_from_json(j.at("pairs"));
    for (const json& f : j.value("failures", json::array())) {
      r.failures.push_back({f.at("fragment_id").get<std::string>(),
                            {parse_error_kind(f.value("code", std::string())), f.value("message", std::string()),
                             f.value("detail", std::string())}});
    }
    r.report = metrics::report_from_json(j.at("report"));
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, std::string("malformed eval run record: ") + e.what());
  }
}

std::vector<std::string> check_run_consistency(const EvalRunRecord& record) {
  std::vector<std::string> mismatches;
  const metrics::ConfusionMatrix3 rebuilt = matrix_of(record.pairs);
  for (std::size_t p = 0; p < kNumClasses; ++p) {
    for (std::size_t a = 0; a < kNumClasses; ++a) {
      if (rebuilt.counts()[p][a] != record.report.matrix.counts()[p][a]) {
        mismatches.push_back("matrix[" + std::to_string(p) + "][" + std::to_string(a) + "]");
      }
    }
  }
  for (std::string& field : metrics::check_report_consistency(record.report)) mismatches.push_back(std::move(field));
  const auto& md = record.report.metadata;
  if (md.dataset_id != record.dataset_id) mismatches.push_back("metadata.dataset");
  if (md.classifier_id != record.classifier) mismatches.push_back("metadata.classifier");
  if (md.seed != record.seed) mismatches.push_back("metadata.seed");
  if (md.test_fraction != record.fraction) mismatches.push_back("metadata.test_fraction");
  return mismatches;
}

std::vector<std::string> check_run_consistency(const json& stored_record) {
  std::vector<std::string> mismatches;
  try {
    const auto pairs = pairs_from_json(stored_record.at("pairs"));
    const json& stored = stored_record.at("report");
    // Metadata is taken from the stored report; everything else is rebuilt.
    const metrics::EvalReport shell = metrics::report_from_json(stored);
    const json rebuilt = metrics::report_to_json(metrics::make_report(matrix_of(pairs), shell.metadata));
    for (const json& op : json::diff(stored, rebuilt)) mismatches.push_back(op.at("path").get<std::string>());
    const auto& md = shell.metadata;
    if (md.dataset_id != stored_record.at("dataset_id").get<std::string>()) mismatches.push_back("/dataset_id");
    if (md.seed != stored_record.at("seed").get<std::uint64_t>()) mismatches.push_back("/seed");
  } catch (const json::exception& e) {
    mismatches.push_back(std::string("malformed record: ") + e.what());
  } catch (const Error& e) {
    mismatches.push_back(std::string("malformed record: ") + e.what());
  }
  return mismatches;
}

}  // namespace amscreen::service
