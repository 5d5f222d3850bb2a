#include "yueasr/utf8.h"

#include "yueasr/error.h"

namespace yueasr::utf8 {

namespace {

std::size_t sequence_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 0;
}

bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

}  // namespace

std::vector<std::string> split_code_points(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t len = sequence_length(static_cast<unsigned char>(text[i]));
    if (len == 0 || i + len > text.size())
      throw Error("invalid UTF-8 sequence at byte " + std::to_string(i));
    for (std::size_t k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(text[i + k]) >> 6) != 0x2)
        throw Error("invalid UTF-8 continuation at byte " +
                    std::to_string(i + k));
    }
    out.emplace_back(text.substr(i, len));
    i += len;
  }
  return out;
}

std::vector<std::string> char_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string ascii_run;
  for (auto& cp : split_code_points(text)) {
    if (cp.size() == 1) {
      if (is_ascii_space(cp[0])) {
        if (!ascii_run.empty()) out.push_back(std::move(ascii_run));
        ascii_run.clear();
      } else {
        ascii_run += cp;
      }
      continue;
    }
    if (!ascii_run.empty()) out.push_back(std::move(ascii_run));
    ascii_run.clear();
    if (cp == "\xE3\x80\x80") continue;  // U+3000
    out.push_back(std::move(cp));
  }
  if (!ascii_run.empty()) out.push_back(std::move(ascii_run));
  return out;
}

std::string strip_spaces(std::string_view text) {
  std::string out;
  for (auto& cp : split_code_points(text)) {
    if (cp.size() == 1 && is_ascii_space(cp[0])) continue;
    if (cp == "\xE3\x80\x80") continue;
    out += cp;
  }
  return out;
}

}  // namespace yueasr::utf8
