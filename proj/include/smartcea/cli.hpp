#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace smartcea {

inline constexpr const char* kVersion = "0.1.0";

// Exit codes: 0 success, 1 computational failure (one machine-readable
// "error: kind=... message=..." line on `err`), 2 usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Flat `key = value` text; '#' starts a comment line. Returns (key, value)
// pairs in file order. Throws Error(Parse) on malformed lines.
std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text,
                                                                   const std::string& source);

}  // namespace smartcea
