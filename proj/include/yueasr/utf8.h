#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace yueasr::utf8 {

/// Splits UTF-8 text into one string per code point. Throws yueasr::Error on
/// invalid sequences.
std::vector<std::string> split_code_points(std::string_view text);

/// Character tokenization used by the language model: one token per non-ASCII
/// code point, maximal runs of ASCII non-space characters kept whole,
/// whitespace dropped.
std::vector<std::string> char_tokens(std::string_view text);

/// Removes all ASCII whitespace and U+3000 (ideographic space).
std::string strip_spaces(std::string_view text);

}  // namespace yueasr::utf8
