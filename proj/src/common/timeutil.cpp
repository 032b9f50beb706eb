#include "amscreen/timeutil.hpp"

#include <charconv>
#include <cstdio>

#include "amscreen/error.hpp"

namespace amscreen {

namespace {

namespace chr = std::chrono;

bool read_int(std::string_view text, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > text.size()) return false;
  const char* first = text.data() + pos;
  auto [ptr, ec] = std::from_chars(first, first + len, out);
  return ec == std::errc{} && ptr == first + len;
}

[[noreturn]] void bad_timestamp(std::string_view text) {
  throw Error(ErrorKind::parse, "malformed timestamp '" + std::string(text) + "'",
              std::string(text));
}

}  // namespace

std::string format_timestamp(Timestamp t) {
  const auto day = chr::floor<chr::days>(t);
  const chr::year_month_day ymd{day};
  const chr::hh_mm_ss hms{t - day};
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

Timestamp parse_timestamp(std::string_view text) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  if (text.size() < 19 || text[4] != '-' || text[7] != '-' || (text[10] != 'T' && text[10] != ' ') ||
      text[13] != ':' || text[16] != ':') {
    bad_timestamp(text);
  }
  if (!read_int(text, 0, 4, y) || !read_int(text, 5, 2, mo) || !read_int(text, 8, 2, d) ||
      !read_int(text, 11, 2, h) || !read_int(text, 14, 2, mi) || !read_int(text, 17, 2, s)) {
    bad_timestamp(text);
  }
  const chr::year_month_day ymd{chr::year{y}, chr::month{static_cast<unsigned>(mo)},
                                chr::day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 60) bad_timestamp(text);

  std::size_t pos = 19;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
  }
  chr::seconds offset{0};
  if (pos == text.size()) {
    // no zone designator: treated as UTC
  } else if (text[pos] == 'Z' && pos + 1 == text.size()) {
  } else if ((text[pos] == '+' || text[pos] == '-') && text.size() == pos + 6 && text[pos + 3] == ':') {
    int oh = 0, om = 0;
    if (!read_int(text, pos + 1, 2, oh) || !read_int(text, pos + 4, 2, om)) bad_timestamp(text);
    offset = chr::hours{oh} + chr::minutes{om};
    if (text[pos] == '-') offset = -offset;
  } else {
    bad_timestamp(text);
  }
  const Timestamp local = chr::sys_days{ymd} + chr::hours{h} + chr::minutes{mi} + chr::seconds{s};
  return local - offset;
}

Timestamp now_utc() { return chr::floor<chr::seconds>(chr::system_clock::now()); }

}  // namespace amscreen
