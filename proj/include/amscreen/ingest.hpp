#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "amscreen/types.hpp"

namespace amscreen::ingest {

enum class SourceKind { news_feed, social_export };

std::string_view to_string(SourceKind kind);
SourceKind parse_source_kind(std::string_view name);

// Network fetches: one attempt, then up to max_retries more, waiting
// initial_backoff, 2x, 4x, ... before each retry.
struct RetryPolicy {
  unsigned max_retries = 3;
  std::chrono::milliseconds initial_backoff{1000};
};

struct SourceConfig {
  SourceKind kind = SourceKind::news_feed;
  // news_feed: http(s):// or file:// URL. social_export: file path.
  std::string location;
  std::optional<std::chrono::seconds> fetch_interval;
  std::optional<std::size_t> max_items;

  // Social export field mapping.
  std::string text_field = "text";
  std::string timestamp_field = "timestamp";
  std::string id_field = "id";

  // Case-insensitive substring filter; empty keeps everything.
  std::vector<std::string> include_keywords;

  RetryPolicy retry;
  std::chrono::milliseconds timeout{30000};

  // Throws Error(invalid_argument) when the location does not suit the kind.
  void validate() const;
};

struct IngestResult {
  std::vector<Document> documents;
  std::size_t skipped = 0;   // items/posts without usable text
  std::size_t filtered = 0;  // dropped by the keyword filter
  std::vector<std::string> warnings;
};

// Implementer-chosen MFS/AML keyword list (English and Bangla) for operators
// who want a starting filter. Not applied unless configured.
const std::vector<std::string>& default_mfs_keywords();

// RSS 2.0, RSS 1.0 (RDF) and Atom. Errors: fetch (network, after retries),
// parse (malformed XML, message names the line).
IngestResult fetch_news_feed(const SourceConfig& config);
IngestResult parse_feed(std::string_view xml, const SourceConfig& config, Timestamp fetched_at);

// Line-delimited JSON or a JSON array of post objects. Errors: io
// (unreadable), parse (empty file or malformed JSON, naming the line).
IngestResult parse_social_export(const SourceConfig& config);
IngestResult parse_social_text(std::string_view text, const SourceConfig& config, Timestamp fetched_at);

// Whitespace-collapsed NFC text of cleaned_text, or raw_text when uncleaned.
std::string dedup_key(const Document& doc);

// Keeps the earliest-fetched document per dedup key (first seen on ties);
// survivors keep their relative order.
std::vector<Document> deduplicate(std::span<const Document> documents);

}  // namespace amscreen::ingest
