#pragma once

#include <map>
#include <string>
#include <vector>

namespace ppdetect {

/// Reads a declarative `key = value` file. `#` starts a comment; blank
/// lines are ignored; keys and values are trimmed.
std::map<std::string, std::string> read_kv_config(const std::string& path);

std::vector<std::string> split_list(const std::string& value);   // comma-separated
std::vector<double> parse_double_list(const std::string& value);  // throws on bad numbers

}  // namespace ppdetect
