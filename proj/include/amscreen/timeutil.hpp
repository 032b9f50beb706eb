#pragma once

#include <string>
#include <string_view>

#include "amscreen/types.hpp"

namespace amscreen {

// ISO-8601 UTC, second resolution: "2024-09-01T08:30:00Z".
std::string format_timestamp(Timestamp t);

// Accepts "YYYY-MM-DDTHH:MM:SSZ" and "YYYY-MM-DDTHH:MM:SS+hh:mm"
// (fractional seconds ignored). Throws Error(parse) otherwise.
Timestamp parse_timestamp(std::string_view text);

Timestamp now_utc();

}  // namespace amscreen
