#include <fstream>

#include "amscreen/corpus.hpp"
#include "amscreen/error.hpp"
#include "amscreen/fileutil.hpp"
#include "amscreen/timeutil.hpp"

namespace amscreen::corpus {

using nlohmann::json;

json to_json(const LabelAuditEntry& e) {
  return json{{"fragment_id", e.fragment_id},
              {"old", e.old_label ? json(to_string(*e.old_label)) : json(nullptr)},
              {"new", to_string(e.new_label)},
              {"annotator", e.annotator},
              {"at", format_timestamp(e.at)}};
}

LabelAuditEntry audit_entry_from_json(const json& j) {
  LabelAuditEntry e;
  e.fragment_id = j.at("fragment_id").get<std::string>();
  if (const json& old = j.at("old"); !old.is_null()) e.old_label = parse_label(old.get<std::string>());
  e.new_label = parse_label(j.at("new").get<std::string>());
  e.annotator = j.at("annotator").get<std::string>();
  e.at = parse_timestamp(j.at("at").get<std::string>());
  return e;
}

LabelAuditTrail::LabelAuditTrail(std::filesystem::path log_path) : log_path_(std::move(log_path)) {
  std::error_code ec;
  if (!std::filesystem::exists(*log_path_, ec)) return;
  const std::string text = read_file(*log_path_);
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const std::string_view line(text.data() + pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    try {
      entries_.push_back(audit_entry_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw Error(ErrorKind::parse,
                  "malformed label audit record at line " + std::to_string(line_no) + ": " + e.what(),
                  std::to_string(line_no));
    }
  }
}

void LabelAuditTrail::append(LabelAuditEntry entry) {
  if (log_path_) {
    std::ofstream out(*log_path_, std::ios::binary | std::ios::app);
    out << to_json(entry).dump() << '\n';
    out.flush();
    if (!out) {
      throw Error(ErrorKind::persistence, "cannot append to label audit log '" + log_path_->string() + "'");
    }
  }
  entries_.push_back(std::move(entry));
}

std::vector<LabelAuditEntry> LabelAuditTrail::entries_for(std::string_view fragment_id) const {
  std::vector<LabelAuditEntry> out;
  for (const auto& e : entries_) {
    if (e.fragment_id == fragment_id) out.push_back(e);
  }
  return out;
}

Fragment apply_label(Corpus& corpus, LabelAuditTrail& audit, std::string_view fragment_id,
                     SentimentLabel label, std::string annotator, Timestamp at) {
  const Fragment* current = corpus.find_fragment(fragment_id);
  if (current == nullptr) {
    throw Error(ErrorKind::not_found, "unknown fragment id '" + std::string(fragment_id) + "'",
                std::string(fragment_id));
  }
  // The audit record is written first so a failed append leaves the label untouched.
  audit.append(LabelAuditEntry{std::string(fragment_id), current->label, label, std::move(annotator), at});
  corpus.set_label(fragment_id, label);
  return *corpus.find_fragment(fragment_id);
}

// ---------------------------------------------------------------------------

ClassDistribution& ClassDistribution::operator+=(const ClassDistribution& other) {
  for (std::size_t i = 0; i < kNumClasses; ++i) counts[i] += other.counts[i];
  total += other.total;
  unlabeled += other.unlabeled;
  return *this;
}

ClassDistribution operator+(ClassDistribution lhs, const ClassDistribution& rhs) {
  lhs += rhs;
  return lhs;
}

ClassDistribution class_distribution(std::span<const Fragment> fragments) {
  ClassDistribution dist;
  for (const Fragment& f : fragments) {
    if (!f.label) {
      ++dist.unlabeled;
      continue;
    }
    ++dist.counts[index_of(*f.label)];
    ++dist.total;
  }
  return dist;
}

}  // namespace amscreen::corpus
