#pragma once

// Flat `key = value` text: one entry per line, `#` starts a comment, blank
// lines are ignored. Keys are dotted (`section.key`).

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace gait {

using KeyValues = std::map<std::string, std::string>;

/// Throws ConfigError on a malformed line or a repeated key. `origin` names
/// the source in messages.
KeyValues parse_key_values(const std::string& text, const std::string& origin);

std::string render_key_values(const KeyValues& values);

std::string trim(const std::string& s);
std::string to_lower(std::string s);
std::string to_upper(std::string s);

/// Comma-separated list with whitespace trimmed and empty items dropped.
std::vector<std::string> split_list(const std::string& value);
std::string join_list(const std::vector<std::string>& items);

bool parse_bool(const std::string& key, const std::string& value);
std::uint64_t parse_uint(const std::string& key, const std::string& value);
double parse_double(const std::string& key, const std::string& value);
std::vector<std::size_t> parse_uint_list(const std::string& key, const std::string& value);

}  // namespace gait
