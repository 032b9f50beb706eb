#pragma once

// Internal helpers around cpp-httplib's client.

#include <memory>
#include <string>
#include <string_view>

#include "httplib.h"

namespace amscreen::detail {

struct UrlParts {
  std::string origin;  // scheme://host[:port]
  std::string path;    // always starts with '/'
};

// Throws Error(invalid_argument) unless the URL is http:// or https://.
UrlParts split_url(std::string_view url);

std::unique_ptr<httplib::Client> make_client(const UrlParts& url);

// Transient failures worth another attempt.
bool is_retryable_status(int status);

}  // namespace amscreen::detail
