#pragma once

#include <stdexcept>
#include <string>

namespace yueasr {

/// Base class for every failure raised by the library. The CLI maps these to
/// exit code 2 (data error).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed text input. `line()` is 1-based, 0 when not line oriented.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace yueasr

namespace yueasr {

/// Jyutping string that cannot be turned into a syllable.
class SyllableError : public Error {
 public:
  enum class Kind { kEmptyInput, kInvalidTone, kUnknownSyllable };
  SyllableError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

}  // namespace yueasr
