#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "amscreen/types.hpp"

namespace amscreen::textprep {

// Ordered tokens; never empty strings, never containing whitespace.
class TokenSequence {
 public:
  TokenSequence() = default;
  // Throws Error(invalid_argument) if a token breaks the invariant.
  explicit TokenSequence(std::vector<std::string> tokens);

  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  std::size_t size() const noexcept { return tokens_.size(); }
  bool empty() const noexcept { return tokens_.empty(); }
  auto begin() const noexcept { return tokens_.begin(); }
  auto end() const noexcept { return tokens_.end(); }

  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;

 private:
  std::vector<std::string> tokens_;
};

// Per-language stopword sets. The baseline pipeline ships with none.
struct StopwordLists {
  std::map<LanguageTag, std::set<std::string>> by_language;
  bool empty() const noexcept { return by_language.empty(); }
};

// Markup, image elements with their captions/alt text, metadata blocks,
// control characters and a repeated title are removed; whitespace is
// collapsed per line; output is NFC. Throws Error(empty_after_clean).
std::string clean_text(std::string_view raw, const std::optional<std::string>& title = std::nullopt);

// Returns a copy with cleaned_text (and lang) set.
Document clean_document(const Document& doc);

struct ScriptCounts {
  std::size_t latin = 0;
  std::size_t bengali = 0;
};

ScriptCounts count_script_letters(std::string_view text);

// >= 90% of Latin+Bengali letters in one script -> that language; otherwise
// mixed; no such letters -> unknown.
LanguageTag detect_language(std::string_view text);

bool is_sentence_terminator(char32_t cp);

// Splits after '.', '!', '?', U+0964 (runs of terminators and a closing
// quote or bracket stay attached) and at newlines; trims; drops blanks.
std::vector<std::string> segment_text(std::string_view text);

// Requires cleaned_text. Fragment ids are "<doc_id>#<index>".
std::vector<Fragment> segment_fragments(const Document& doc);

// Runs of letters, marks and digits; Latin lowercased, Bengali unchanged.
// Throws Error(invalid_argument) when text is empty or blank.
TokenSequence tokenize(std::string_view text, LanguageTag lang, const StopwordLists& stopwords = {});

}  // namespace amscreen::textprep
