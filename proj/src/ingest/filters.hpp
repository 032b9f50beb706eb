#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace amscreen::ingest::detail {

std::string fold_case(std::string_view utf8);

// Case-insensitive substring match against any keyword. No keywords: accept all.
class KeywordFilter {
 public:
  explicit KeywordFilter(const std::vector<std::string>& keywords);
  bool accepts(std::string_view text) const;

 private:
  std::vector<std::string> folded_;
};

}  // namespace amscreen::ingest::detail
