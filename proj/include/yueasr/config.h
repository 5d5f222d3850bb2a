#pragma once

// Flat `key = value` configuration text. '#' starts a comment.

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace yueasr {

struct ConfigValue {
  std::string value;
  std::size_t line = 0;
};

using KeyValues = std::map<std::string, ConfigValue, std::less<>>;

/// Throws ParseError on malformed lines and repeated keys.
KeyValues parse_key_values(std::string_view text);
KeyValues read_key_values(const std::filesystem::path& path);

double config_double(const KeyValues& kv, std::string_view key, double fallback);
long long config_int(const KeyValues& kv, std::string_view key, long long fallback);
std::string config_string(const KeyValues& kv, std::string_view key,
                          std::string fallback);

}  // namespace yueasr
