#include "amscreen/error.hpp"
#include "amscreen/textprep.hpp"
#include "amscreen/unicode.hpp"

namespace amscreen::textprep {

namespace {

bool is_closing_mark(char32_t cp) {
  switch (cp) {
    case U'"':
    case U'\'':
    case U')':
    case U']':
    case U'”':
    case U'’':
    case U'»':
      return true;
    default:
      return false;
  }
}

}  // namespace

TokenSequence::TokenSequence(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  for (const std::string& t : tokens_) {
    if (t.empty()) throw Error(ErrorKind::invalid_argument, "empty token");
    for (char32_t cp : unicode::decode(t)) {
      if (unicode::is_whitespace(cp)) {
        throw Error(ErrorKind::invalid_argument, "token contains whitespace: '" + t + "'", t);
      }
    }
  }
}

ScriptCounts count_script_letters(std::string_view text) {
  ScriptCounts counts;
  for (char32_t cp : unicode::decode(text)) {
    if (unicode::is_bengali_letter(cp)) {
      ++counts.bengali;
    } else if (unicode::is_latin_letter(cp)) {
      ++counts.latin;
    }
  }
  return counts;
}

LanguageTag detect_language(std::string_view text) {
  const ScriptCounts c = count_script_letters(text);
  const std::size_t total = c.latin + c.bengali;
  if (total == 0) return LanguageTag::unknown;
  // Integer form of ratio >= 0.9.
  if (10 * c.bengali >= 9 * total) return LanguageTag::bangla;
  if (10 * c.latin >= 9 * total) return LanguageTag::english;
  return LanguageTag::mixed;
}

bool is_sentence_terminator(char32_t cp) {
  return cp == U'.' || cp == U'!' || cp == U'?' || cp == unicode::kDanda;
}

std::vector<std::string> segment_text(std::string_view text) {
  const std::u32string cps = unicode::decode(text);
  std::vector<std::string> out;
  std::u32string current;
  auto close = [&] {
    std::string piece = unicode::trim(unicode::encode(current));
    current.clear();
    if (!piece.empty()) out.push_back(std::move(piece));
  };
  for (std::size_t i = 0; i < cps.size(); ++i) {
    const char32_t cp = cps[i];
    if (cp == U'\n') {
      close();
      continue;
    }
    current.push_back(cp);
    if (!is_sentence_terminator(cp)) continue;
    while (i + 1 < cps.size() && is_sentence_terminator(cps[i + 1])) current.push_back(cps[++i]);
    while (i + 1 < cps.size() && is_closing_mark(cps[i + 1])) current.push_back(cps[++i]);
    close();
  }
  close();
  return out;
}

std::vector<Fragment> segment_fragments(const Document& doc) {
  if (!doc.cleaned_text) {
    throw Error(ErrorKind::invalid_argument, "document '" + doc.id + "' has not been cleaned", doc.id);
  }
  std::vector<Fragment> fragments;
  for (std::string& piece : segment_text(*doc.cleaned_text)) {
    Fragment f;
    f.index = fragments.size();
    f.id = doc.id + "#" + std::to_string(f.index);
    f.doc_id = doc.id;
    f.lang = detect_language(piece);
    f.text = std::move(piece);
    fragments.push_back(std::move(f));
  }
  return fragments;
}

TokenSequence tokenize(std::string_view text, LanguageTag lang, const StopwordLists& stopwords) {
  if (unicode::trim(text).empty()) {
    throw Error(ErrorKind::invalid_argument, "tokenize requires non-blank text");
  }
  std::vector<const std::set<std::string>*> active;
  auto use = [&](LanguageTag tag) {
    if (auto it = stopwords.by_language.find(tag); it != stopwords.by_language.end()) active.push_back(&it->second);
  };
  if (lang == LanguageTag::mixed) {
    use(LanguageTag::english);
    use(LanguageTag::bangla);
  } else {
    use(lang);
  }

  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (current.empty()) return;
    bool stop = false;
    for (const auto* set : active) stop = stop || set->contains(current);
    if (!stop) tokens.push_back(current);
    current.clear();
  };
  for (char32_t cp : unicode::decode(text)) {
    if (unicode::is_word_char(cp)) {
      unicode::append(current, unicode::to_lower(cp));
    } else {
      flush();
    }
  }
  flush();
  return TokenSequence(std::move(tokens));
}

}  // namespace amscreen::textprep
