#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "amscreen/types.hpp"

namespace amscreen::corpus {

// Documents and fragments with id uniqueness enforced on insertion.
// Safe to share read-only across threads; mutation needs a single writer.
class Corpus {
 public:
  Corpus() = default;

  // Throws Error(duplicate_id) naming the id. Empty raw_text is rejected.
  void add_document(Document doc);
  // Throws Error(duplicate_id) on a repeated id or (doc_id, index) pair.
  void add_fragment(Fragment frag);

  const std::vector<Document>& documents() const noexcept { return documents_; }
  const std::vector<Fragment>& fragments() const noexcept { return fragments_; }

  const Document* find_document(std::string_view id) const;
  const Fragment* find_fragment(std::string_view id) const;

  void set_label(std::string_view fragment_id, std::optional<SentimentLabel> label);
  void set_prediction(std::string_view fragment_id, std::optional<Prediction> prediction);

  bool empty() const noexcept { return documents_.empty() && fragments_.empty(); }

 private:
  Fragment& fragment_ref(std::string_view id);

  std::vector<Document> documents_;
  std::vector<Fragment> fragments_;
  std::unordered_map<std::string, std::size_t> doc_index_;
  std::unordered_map<std::string, std::size_t> frag_index_;
  std::set<std::pair<std::string, std::size_t>> frag_positions_;
};

// One JSON object per line. Documents carry "kind":"doc", fragments "kind":"frag".
Corpus load_corpus(const std::filesystem::path& path);
// Parses corpus text already in memory; `origin` is only used in messages.
Corpus parse_corpus(std::string_view text, std::string_view origin = "<memory>");
void save_corpus(std::span<const Document> documents, std::span<const Fragment> fragments,
                 const std::filesystem::path& path);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);
std::string serialize_corpus(std::span<const Document> documents, std::span<const Fragment> fragments);

nlohmann::json to_json(const Document& doc);
nlohmann::json to_json(const Fragment& frag);
nlohmann::json to_json(const Prediction& prediction);
Document document_from_json(const nlohmann::json& j);
Fragment fragment_from_json(const nlohmann::json& j);
Prediction prediction_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Labeling

struct LabelAuditEntry {
  std::string fragment_id;
  std::optional<SentimentLabel> old_label;
  SentimentLabel new_label = SentimentLabel::neutral;
  std::string annotator;
  Timestamp at{};

  friend bool operator==(const LabelAuditEntry&, const LabelAuditEntry&) = default;
};

nlohmann::json to_json(const LabelAuditEntry& entry);
LabelAuditEntry audit_entry_from_json(const nlohmann::json& j);

// Append-only. With a file path, every entry is appended to the file as one
// JSON line before it becomes visible in memory.
class LabelAuditTrail {
 public:
  LabelAuditTrail() = default;
  // Replays an existing log (if any) and appends to it from then on.
  explicit LabelAuditTrail(std::filesystem::path log_path);

  void append(LabelAuditEntry entry);
  const std::vector<LabelAuditEntry>& entries() const noexcept { return entries_; }
  std::vector<LabelAuditEntry> entries_for(std::string_view fragment_id) const;

 private:
  std::optional<std::filesystem::path> log_path_;
  std::vector<LabelAuditEntry> entries_;
};

// Sets the fragment's label and records the change. Throws Error(not_found).
Fragment apply_label(Corpus& corpus, LabelAuditTrail& audit, std::string_view fragment_id,
                     SentimentLabel label, std::string annotator, Timestamp at);

// ---------------------------------------------------------------------------
// Class distribution

struct ClassDistribution {
  std::array<std::size_t, kNumClasses> counts{};
  std::size_t total = 0;
  std::size_t unlabeled = 0;

  std::size_t count(SentimentLabel label) const { return counts[index_of(label)]; }
  ClassDistribution& operator+=(const ClassDistribution& other);
  friend bool operator==(const ClassDistribution&, const ClassDistribution&) = default;
};

ClassDistribution operator+(ClassDistribution lhs, const ClassDistribution& rhs);

ClassDistribution class_distribution(std::span<const Fragment> fragments);

// ---------------------------------------------------------------------------
// Splitting

struct DatasetSplit {
  std::set<std::string> train_ids;
  std::set<std::string> test_ids;
  std::uint64_t seed = 0;
  double test_fraction = 0.0;

  friend bool operator==(const DatasetSplit&, const DatasetSplit&) = default;
};

nlohmann::json to_json(const DatasetSplit& split);
DatasetSplit split_from_json(const nlohmann::json& j);

// floor(n * fraction + 1/2), with a 1e-9 guard so decimal fractions such as
// 0.3578 round the way their decimal value does.
std::size_t round_half_up_count(std::size_t n, double fraction);

// Per class, round_half_up_count(n_c, test_fraction) fragments go to test,
// chosen by a seeded shuffle of the class's ids in sorted order. Unlabeled
// fragments are ignored. Throws Error(invalid_argument) unless 0 < f < 1.
DatasetSplit stratified_split(std::span<const Fragment> fragments, double test_fraction,
                              std::uint64_t seed);

}  // namespace amscreen::corpus
