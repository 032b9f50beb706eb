#include <cmath>

#include "amscreen/error.hpp"
#include "amscreen/fileutil.hpp"
#include "amscreen/ingest.hpp"
#include "amscreen/timeutil.hpp"
#include "amscreen/unicode.hpp"
#include "filters.hpp"
#include "json.hpp"

namespace amscreen::ingest {

using nlohmann::json;

namespace {

struct Post {
  std::size_t line = 0;
  json value;
};

// A JSON array if the first non-space byte is '[', otherwise one object per line.
std::vector<Post> read_posts(std::string_view text, const std::string& origin) {
  std::vector<Post> posts;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) {
    throw Error(ErrorKind::parse, "social export '" + origin + "' is empty", origin);
  }
  if (text[first] == '[') {
    json arr;
    try {
      arr = json::parse(text);
    } catch (const json::parse_error& e) {
      throw Error(ErrorKind::parse, "social export '" + origin + "' is not valid JSON: " + e.what(), origin);
    }
    std::size_t n = 0;
    for (json& v : arr) posts.push_back({++n, std::move(v)});
    return posts;
  }
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    const std::string_view line = text.substr(pos, end - pos);
    ++line_no;
    pos = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      posts.push_back({line_no, json::parse(line)});
    } catch (const json::parse_error& e) {
      throw Error(ErrorKind::parse,
                  "social export '" + origin + "' line " + std::to_string(line_no) + ": " + e.what(),
                  origin + ":" + std::to_string(line_no));
    }
  }
  return posts;
}

std::optional<Timestamp> post_time(const json& post, const std::string& field) {
  if (!post.contains(field)) return std::nullopt;
  const json& v = post.at(field);
  if (v.is_number()) return Timestamp{std::chrono::seconds{static_cast<std::int64_t>(std::floor(v.get<double>()))}};
  if (v.is_string()) {
    try {
      return parse_timestamp(v.get<std::string>());
    } catch (const Error&) {
      return std::nullopt;
    }
  }
  return std::nullopt;
}

std::optional<std::string> post_id(const json& post, const std::string& field) {
  if (!post.contains(field)) return std::nullopt;
  const json& v = post.at(field);
  if (v.is_string() && !v.get<std::string>().empty()) return v.get<std::string>();
  if (v.is_number_integer()) return v.dump();
  return std::nullopt;
}

}  // namespace

IngestResult parse_social_text(std::string_view text, const SourceConfig& config, Timestamp fetched_at) {
  IngestResult result;
  const detail::KeywordFilter filter(config.include_keywords);
  for (const Post& post : read_posts(text, config.location)) {
    if (config.max_items && result.documents.size() >= *config.max_items) break;
    const std::string where = config.location + ":" + std::to_string(post.line);
    if (!post.value.is_object()) {
      ++result.skipped;
      result.warnings.push_back(where + ": not a JSON object");
      continue;
    }
    if (!post.value.contains(config.text_field) || !post.value.at(config.text_field).is_string()) {
      ++result.skipped;
      result.warnings.push_back(where + ": missing text field '" + config.text_field + "'");
      continue;
    }
    std::string body = post.value.at(config.text_field).get<std::string>();
    if (unicode::trim(body).empty()) {
      ++result.skipped;
      result.warnings.push_back(where + ": empty text");
      continue;
    }
    if (!filter.accepts(body)) {
      ++result.filtered;
      continue;
    }
    Document doc;
    doc.source = DocumentSource::social_export;
    const std::optional<std::string> id = post_id(post.value, config.id_field);
    const std::string local = id ? *id : hex_id(body);
    doc.id = "social-" + local;
    doc.origin_ref = config.location + "#" + local;
    doc.fetched_at = post_time(post.value, config.timestamp_field).value_or(fetched_at);
    doc.raw_text = std::move(body);
    result.documents.push_back(std::move(doc));
  }
  return result;
}

IngestResult parse_social_export(const SourceConfig& config) {
  config.validate();
  if (config.kind != SourceKind::social_export) {
    throw Error(ErrorKind::invalid_argument, "parse_social_export needs a social_export source");
  }
  return parse_social_text(read_file(config.location), config, now_utc());
}

}  // namespace amscreen::ingest
