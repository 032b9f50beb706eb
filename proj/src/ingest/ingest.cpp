#include "amscreen/ingest.hpp"

#include <algorithm>
#include <map>

#include "amscreen/error.hpp"
#include "amscreen/unicode.hpp"
#include "filters.hpp"

namespace amscreen::ingest {

namespace detail {

std::string fold_case(std::string_view utf8) {
  std::u32string cps = unicode::decode(unicode::nfc(utf8));
  for (char32_t& cp : cps) cp = unicode::to_lower(cp);
  return unicode::encode(cps);
}

KeywordFilter::KeywordFilter(const std::vector<std::string>& keywords) {
  for (const std::string& k : keywords) {
    std::string folded = fold_case(unicode::trim(k));
    if (!folded.empty()) folded_.push_back(std::move(folded));
  }
}

bool KeywordFilter::accepts(std::string_view text) const {
  if (folded_.empty()) return true;
  const std::string hay = fold_case(text);
  return std::any_of(folded_.begin(), folded_.end(),
                     [&](const std::string& k) { return hay.find(k) != std::string::npos; });
}

}  // namespace detail

std::string_view to_string(SourceKind kind) {
  return kind == SourceKind::news_feed ? "news_feed" : "social_export";
}

SourceKind parse_source_kind(std::string_view name) {
  if (name == "news_feed" || name == "rss" || name == "news") return SourceKind::news_feed;
  if (name == "social_export" || name == "social") return SourceKind::social_export;
  throw Error(ErrorKind::invalid_argument,
              "unknown source kind '" + std::string(name) + "' (expected news_feed or social_export)",
              std::string(name));
}

void SourceConfig::validate() const {
  if (location.empty()) throw Error(ErrorKind::invalid_argument, "source location is empty");
  const bool is_url = location.starts_with("http://") || location.starts_with("https://");
  const bool is_file_url = location.starts_with("file://");
  if (kind == SourceKind::news_feed && !is_url && !is_file_url) {
    throw Error(ErrorKind::invalid_argument,
                "news feed location must be an http://, https:// or file:// URL: '" + location + "'", location);
  }
  if (kind == SourceKind::social_export && is_url) {
    throw Error(ErrorKind::invalid_argument, "social export location must be a local file path: '" + location + "'",
                location);
  }
  if (max_items && *max_items == 0) throw Error(ErrorKind::invalid_argument, "max_items must be positive");
  if (timeout.count() <= 0) throw Error(ErrorKind::invalid_argument, "timeout must be positive");
  if (text_field.empty()) throw Error(ErrorKind::invalid_argument, "text_field must not be empty");
}

const std::vector<std::string>& default_mfs_keywords() {
  static const std::vector<std::string> kKeywords = {
      "bkash",          "nagad",     "rocket",        "upay",      "mobile banking", "mobile financial",
      "mfs",            "money laundering", "hundi", "fraud",     "scam",           "agent",
      "cash out",       "cash-out",  "transaction",   "wallet",    "remittance",
      "বিকাশ",          "নগদ",       "রকেট",          "মোবাইল ব্যাংকিং", "অর্থ পাচার", "হুন্ডি",
      "প্রতারণা",        "লেনদেন",     "এজেন্ট",         "ক্যাশ আউট", "রেমিট্যান্স",
  };
  return kKeywords;
}

std::string dedup_key(const Document& doc) {
  return unicode::collapse_whitespace(unicode::nfc(doc.cleaned_text ? *doc.cleaned_text : doc.raw_text));
}

std::vector<Document> deduplicate(std::span<const Document> documents) {
  // key -> index of the current winner
  std::map<std::string, std::size_t> winner;
  for (std::size_t i = 0; i < documents.size(); ++i) {
    auto [it, inserted] = winner.try_emplace(dedup_key(documents[i]), i);
    if (!inserted && documents[i].fetched_at < documents[it->second].fetched_at) it->second = i;
  }
  std::vector<bool> keep(documents.size(), false);
  for (const auto& [key, index] : winner) keep[index] = true;
  std::vector<Document> out;
  for (std::size_t i = 0; i < documents.size(); ++i) {
    if (keep[i]) out.push_back(documents[i]);
  }
  return out;
}

}  // namespace amscreen::ingest
