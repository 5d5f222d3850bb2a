#include "yueasr/config.h"

#include <fstream>
#include <sstream>

#include "yueasr/error.h"

namespace yueasr {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

const ConfigValue* find(const KeyValues& kv, std::string_view key) {
  auto it = kv.find(key);
  return it == kv.end() ? nullptr : &it->second;
}

}  // namespace

KeyValues parse_key_values(std::string_view text) {
  KeyValues kv;
  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++lineno;
    if (auto h = line.find('#'); h != std::string_view::npos) line = line.substr(0, h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError("expected key = value", lineno);
    }
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty()) throw ParseError("empty key", lineno);
    if (kv.count(key)) throw ParseError("repeated key '" + key + "'", lineno);
    kv[key] = {std::string(trim(line.substr(eq + 1))), lineno};
  }
  return kv;
}

KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_key_values(ss.str());
}

double config_double(const KeyValues& kv, std::string_view key, double fallback) {
  const ConfigValue* v = find(kv, key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    double d = std::stod(v->value, &used);
    if (used != v->value.size()) throw std::invalid_argument("trailing");
    return d;
  } catch (const std::exception&) {
    throw ParseError(std::string(key) + ": expected a number, got '" + v->value + "'",
                     v->line);
  }
}

long long config_int(const KeyValues& kv, std::string_view key, long long fallback) {
  const ConfigValue* v = find(kv, key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    long long n = std::stoll(v->value, &used);
    if (used != v->value.size()) throw std::invalid_argument("trailing");
    return n;
  } catch (const std::exception&) {
    throw ParseError(std::string(key) + ": expected an integer, got '" + v->value + "'",
                     v->line);
  }
}

std::string config_string(const KeyValues& kv, std::string_view key,
                          std::string fallback) {
  const ConfigValue* v = find(kv, key);
  return v ? v->value : fallback;
}

}  // namespace yueasr
