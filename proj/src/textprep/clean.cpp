#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>

#include "amscreen/error.hpp"
#include "amscreen/textprep.hpp"
#include "amscreen/unicode.hpp"

namespace amscreen::textprep {

namespace {

// Elements whose whole content is dropped: images and captions, embedded
// media, scripts/styles and document metadata.
constexpr std::array<std::string_view, 13> kDropContent = {
    "script", "style", "figure", "figcaption", "picture", "svg",    "noscript",
    "head",   "title", "iframe", "video",      "audio",   "object"};

constexpr std::array<std::string_view, 27> kBlockTags = {
    "p",    "div",     "br",     "li",     "ul",     "ol",    "h1",  "h2",    "h3",
    "h4",   "h5",      "h6",     "tr",     "table",  "section", "article", "header", "footer",
    "blockquote", "hr", "pre",   "aside",  "nav",    "main",  "dd",  "dt",    "body"};

template <std::size_t N>
bool contains(const std::array<std::string_view, N>& set, std::string_view name) {
  return std::find(set.begin(), set.end(), name) != set.end();
}

bool ascii_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Position just past the '>' closing the tag that starts at `open`, honoring
// quoted attribute values; npos when the tag never closes.
std::size_t tag_end(std::string_view s, std::size_t open) {
  char quote = 0;
  for (std::size_t i = open + 1; i < s.size(); ++i) {
    const char c = s[i];
    if (quote) {
      if (c == quote) quote = 0;
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '>') {
      return i + 1;
    }
  }
  return std::string_view::npos;
}

// Finds "</name" (case-insensitive) at or after `from`; returns the position
// after its closing '>' or s.size() when absent.
std::size_t skip_to_close(std::string_view s, std::size_t from, std::string_view name) {
  const std::string lowered = ascii_lower(s.substr(from));
  const std::string needle = "</" + std::string(name);
  std::size_t at = lowered.find(needle);
  while (at != std::string::npos) {
    const std::size_t after = at + needle.size();
    if (after >= lowered.size() || !std::isalnum(static_cast<unsigned char>(lowered[after]))) {
      const std::size_t end = tag_end(s, from + at);
      return end == std::string_view::npos ? s.size() : end;
    }
    at = lowered.find(needle, after);
  }
  return s.size();
}

std::string strip_markup(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] != '<') {
      out.push_back(s[i++]);
      continue;
    }
    if (s.substr(i, 4) == "<!--") {
      const std::size_t close = s.find("-->", i + 4);
      i = close == std::string_view::npos ? s.size() : close + 3;
      continue;
    }
    const bool closing = i + 1 < s.size() && s[i + 1] == '/';
    const std::size_t name_start = i + (closing ? 2 : 1);
    const bool declaration = name_start < s.size() && (s[name_start] == '!' || s[name_start] == '?');
    if (name_start >= s.size() || (!ascii_alpha(s[name_start]) && !declaration)) {
      out.push_back(s[i++]);
      continue;
    }
    const std::size_t end = tag_end(s, i);
    if (end == std::string_view::npos) {
      out.push_back(s[i++]);
      continue;
    }
    if (declaration) {
      i = end;
      continue;
    }
    std::size_t name_end = name_start;
    while (name_end < s.size() && (std::isalnum(static_cast<unsigned char>(s[name_end])) || s[name_end] == '-')) {
      ++name_end;
    }
    const std::string name = ascii_lower(s.substr(name_start, name_end - name_start));
    const bool self_closing = end >= 2 && s[end - 2] == '/';
    if (!closing && !self_closing && contains(kDropContent, name)) {
      i = skip_to_close(s, end, name);
      out.push_back('\n');
      continue;
    }
    if (contains(kBlockTags, name)) out.push_back('\n');
    i = end;
  }
  return out;
}

std::optional<char32_t> named_entity(std::string_view name) {
  if (name == "amp") return U'&';
  if (name == "lt") return U'<';
  if (name == "gt") return U'>';
  if (name == "quot") return U'"';
  if (name == "apos") return U'\'';
  if (name == "nbsp") return U' ';
  if (name == "ndash") return U'–';
  if (name == "mdash") return U'—';
  if (name == "hellip") return U'…';
  if (name == "lsquo") return U'‘';
  if (name == "rsquo") return U'’';
  if (name == "ldquo") return U'“';
  if (name == "rdquo") return U'”';
  return std::nullopt;
}

std::string decode_entities(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] != '&') {
      out.push_back(s[i++]);
      continue;
    }
    const std::size_t semi = s.find(';', i + 1);
    if (semi == std::string_view::npos || semi - i > 12) {
      out.push_back(s[i++]);
      continue;
    }
    const std::string_view body = s.substr(i + 1, semi - i - 1);
    std::optional<char32_t> cp;
    if (body.size() > 1 && body[0] == '#') {
      std::uint32_t value = 0;
      const bool hex = body[1] == 'x' || body[1] == 'X';
      const std::string_view digits = body.substr(hex ? 2 : 1);
      auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value, hex ? 16 : 10);
      if (ec == std::errc{} && ptr == digits.data() + digits.size() && !digits.empty() && value > 0 &&
          value <= 0x10FFFF && !(value >= 0xD800 && value <= 0xDFFF)) {
        cp = static_cast<char32_t>(value);
      }
    } else {
      cp = named_entity(body);
    }
    if (!cp) {
      out.push_back(s[i++]);
      continue;
    }
    unicode::append(out, *cp);
    i = semi + 1;
  }
  return out;
}

bool is_line_break(char32_t cp) { return cp == U'\n' || cp == 0x2028 || cp == 0x2029 || cp == 0x0085; }

// Drops control characters (tabs and line breaks become whitespace), collapses
// whitespace within each line, trims lines and removes blank lines and lines
// equal to the title.
std::string normalize_lines(std::string_view s, const std::string& title_key) {
  std::vector<std::string> lines;
  std::string current;
  auto flush = [&] {
    std::string line = unicode::collapse_whitespace(current);
    current.clear();
    if (line.empty()) return;
    if (!title_key.empty() && line == title_key) return;
    lines.push_back(std::move(line));
  };
  for (char32_t cp : unicode::decode(s)) {
    if (is_line_break(cp)) {
      flush();
    } else if (cp == U'\t' || cp == U'\r' || cp == U'\f' || cp == U'\v') {
      current.push_back(' ');
    } else if (unicode::is_control(cp) || cp == 0xFEFF) {
      continue;
    } else {
      unicode::append(current, cp);
    }
  }
  flush();
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) out.push_back('\n');
    out += lines[i];
  }
  return out;
}

std::string clean_pass(std::string_view s, const std::string& title_key) {
  return unicode::nfc(normalize_lines(decode_entities(strip_markup(s)), title_key));
}

}  // namespace

std::string clean_text(std::string_view raw, const std::optional<std::string>& title) {
  const std::string title_key = title ? unicode::nfc(unicode::collapse_whitespace(*title)) : std::string();
  // Feeds often carry entity-escaped markup; repeating the pass until nothing
  // changes strips it too and makes cleaning idempotent.
  std::string text = clean_pass(raw, title_key);
  for (int pass = 0; pass < 8; ++pass) {
    std::string next = clean_pass(text, title_key);
    if (next == text) break;
    text = std::move(next);
  }
  if (text.empty()) {
    throw Error(ErrorKind::empty_after_clean, "document is empty after cleaning");
  }
  return text;
}

Document clean_document(const Document& doc) {
  if (doc.raw_text.empty()) {
    throw Error(ErrorKind::invalid_argument, "document '" + doc.id + "' has empty raw_text", doc.id);
  }
  Document out = doc;
  try {
    out.cleaned_text = clean_text(doc.raw_text, doc.title);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::empty_after_clean) {
      throw Error(ErrorKind::empty_after_clean, "document '" + doc.id + "' is empty after cleaning", doc.id);
    }
    throw;
  }
  out.lang = detect_language(*out.cleaned_text);
  return out;
}

}  // namespace amscreen::textprep
