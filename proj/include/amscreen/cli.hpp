#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "amscreen/classify.hpp"

namespace amscreen::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomainError = 1;
inline constexpr int kExitUsage = 2;

// args[0] is the program name. Data goes to `out` (or --output files),
// diagnostics to `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
             const classify::EnvLookup& env = classify::process_env);

}  // namespace amscreen::cli
