#include <sstream>
#include <thread>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "../common/http_client.hpp"
#include "amscreen/error.hpp"
#include "amscreen/fileutil.hpp"
#include "amscreen/ingest.hpp"
#include "amscreen/timeutil.hpp"
#include "amscreen/unicode.hpp"
#include "filters.hpp"

namespace amscreen::ingest {

namespace pt = boost::property_tree;

namespace {

struct FeedItem {
  std::string title;
  std::string link;
  std::string guid;
  std::string content;
};

std::string child_text(const pt::ptree& node, const char* key) {
  if (auto child = node.get_child_optional(key)) return unicode::trim(child->data());
  return {};
}

FeedItem read_rss_item(const pt::ptree& item) {
  FeedItem out;
  out.title = child_text(item, "title");
  out.link = child_text(item, "link");
  out.guid = child_text(item, "guid");
  out.content = child_text(item, "content:encoded");
  if (out.content.empty()) out.content = child_text(item, "description");
  return out;
}

FeedItem read_atom_entry(const pt::ptree& entry) {
  FeedItem out;
  out.title = child_text(entry, "title");
  out.guid = child_text(entry, "id");
  for (const auto& [key, child] : entry) {
    if (key != "link") continue;
    const std::string rel = child.get("<xmlattr>.rel", std::string("alternate"));
    const std::string href = child.get("<xmlattr>.href", std::string());
    if (rel == "alternate" && !href.empty()) {
      out.link = href;
      break;
    }
    if (out.link.empty()) out.link = href;
  }
  out.content = child_text(entry, "content");
  if (out.content.empty()) out.content = child_text(entry, "summary");
  return out;
}

std::vector<FeedItem> read_items(const pt::ptree& root) {
  std::vector<FeedItem> items;
  if (auto rss = root.get_child_optional("rss")) {
    if (auto channel = rss->get_child_optional("channel")) {
      for (const auto& [key, child] : *channel) {
        if (key == "item") items.push_back(read_rss_item(child));
      }
    }
    return items;
  }
  if (auto rdf = root.get_child_optional("rdf:RDF")) {
    for (const auto& [key, child] : *rdf) {
      if (key == "item") items.push_back(read_rss_item(child));
    }
    return items;
  }
  if (auto feed = root.get_child_optional("feed")) {
    for (const auto& [key, child] : *feed) {
      if (key == "entry") items.push_back(read_atom_entry(child));
    }
    return items;
  }
  throw Error(ErrorKind::parse, "document is neither RSS nor Atom (no <rss>, <rdf:RDF> or <feed> root)");
}

std::string download(const std::string& url, const SourceConfig& config) {
  const amscreen::detail::UrlParts parts = amscreen::detail::split_url(url);
  auto client = amscreen::detail::make_client(parts);
  const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(config.timeout);
  client->set_connection_timeout(seconds.count());
  client->set_read_timeout(seconds.count());

  std::string last_failure;
  const unsigned attempts = config.retry.max_retries + 1;
  for (unsigned attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(config.retry.initial_backoff * (1u << std::min(attempt - 1, 10u)));
    }
    const httplib::Result res = client->Get(parts.path);
    if (!res) {
      last_failure = httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 200 && res->status < 300) return res->body;
    last_failure = "HTTP " + std::to_string(res->status);
    if (!amscreen::detail::is_retryable_status(res->status)) break;
  }
  throw Error(ErrorKind::fetch, "fetching '" + url + "' failed: " + last_failure, url);
}

}  // namespace

IngestResult parse_feed(std::string_view xml, const SourceConfig& config, Timestamp fetched_at) {
  pt::ptree root;
  try {
    std::istringstream in{std::string(xml)};
    pt::read_xml(in, root);
  } catch (const pt::xml_parser_error& e) {
    throw Error(ErrorKind::parse,
                "malformed feed '" + config.location + "' at line " + std::to_string(e.line()) + ": " + e.message(),
                std::to_string(e.line()));
  }

  IngestResult result;
  const detail::KeywordFilter filter(config.include_keywords);
  for (FeedItem& item : read_items(root)) {
    if (config.max_items && result.documents.size() >= *config.max_items) break;
    if (unicode::trim(item.content).empty()) {
      ++result.skipped;
      result.warnings.push_back("feed item '" + (item.title.empty() ? item.link : item.title) + "' has no content");
      continue;
    }
    if (!filter.accepts(item.title + "\n" + item.content)) {
      ++result.filtered;
      continue;
    }
    Document doc;
    doc.source = DocumentSource::news_feed;
    doc.origin_ref = !item.link.empty() ? item.link : item.guid;
    doc.id = "news-" + hex_id(doc.origin_ref + "\n" + item.title + "\n" + item.content);
    doc.fetched_at = fetched_at;
    if (!item.title.empty()) doc.title = item.title;
    doc.raw_text = std::move(item.content);
    result.documents.push_back(std::move(doc));
  }
  return result;
}

IngestResult fetch_news_feed(const SourceConfig& config) {
  config.validate();
  if (config.kind != SourceKind::news_feed) {
    throw Error(ErrorKind::invalid_argument, "fetch_news_feed needs a news_feed source");
  }
  const Timestamp fetched_at = now_utc();
  constexpr std::string_view kFileScheme = "file://";
  if (config.location.starts_with(kFileScheme)) {
    return parse_feed(read_file(config.location.substr(kFileScheme.size())), config, fetched_at);
  }
  return parse_feed(download(config.location, config), config, fetched_at);
}

}  // namespace amscreen::ingest
