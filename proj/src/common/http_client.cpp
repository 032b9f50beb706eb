#include "http_client.hpp"

#include "amscreen/error.hpp"

namespace amscreen::detail {

UrlParts split_url(std::string_view url) {
  const std::size_t scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) {
    throw Error(ErrorKind::invalid_argument, "not a URL: '" + std::string(url) + "'", std::string(url));
  }
  const std::string_view scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw Error(ErrorKind::invalid_argument, "unsupported URL scheme '" + std::string(scheme) + "'",
                std::string(url));
  }
  const std::size_t host_start = scheme_end + 3;
  const std::size_t path_start = url.find('/', host_start);
  UrlParts parts;
  parts.origin = std::string(url.substr(0, path_start));
  parts.path = path_start == std::string_view::npos ? "/" : std::string(url.substr(path_start));
  if (parts.origin.size() <= host_start) {
    throw Error(ErrorKind::invalid_argument, "URL has no host: '" + std::string(url) + "'", std::string(url));
  }
  return parts;
}

std::unique_ptr<httplib::Client> make_client(const UrlParts& url) {
  auto client = std::make_unique<httplib::Client>(url.origin);
  if (!client->is_valid()) {
    throw Error(ErrorKind::invalid_argument, "cannot create HTTP client for '" + url.origin + "'", url.origin);
  }
  client->set_follow_location(true);
  return client;
}

bool is_retryable_status(int status) { return status == 408 || status == 429 || status >= 500; }

}  // namespace amscreen::detail
