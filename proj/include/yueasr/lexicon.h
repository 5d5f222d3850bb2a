#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "yueasr/phonology.h"

namespace yueasr {

/// A word with one or more Jyutping readings, one syllable per character.
struct LexiconEntry {
  std::string word;
  std::vector<std::vector<std::string>> pronunciations;
};

/// Reads `word<TAB>syl1 syl2 ...` lines. Repeated words accumulate readings.
std::vector<LexiconEntry> read_word_lexicon(const std::filesystem::path& path);
std::vector<LexiconEntry> parse_word_lexicon(std::string_view text);

/// Word to phone-sequence mapping under one scheme.
struct PhoneLexicon {
  Scheme scheme = Scheme::kIF;
  /// Pronunciations per word, deduplicated and sorted by their label string.
  std::map<std::string, std::vector<PhoneSeq>> entries;
  std::set<Phone> phone_set;

  bool operator==(const PhoneLexicon&) const = default;
};

/// Runs every reading through parse, optional merge and the scheme's phone
/// conversion. Throws Error naming the word and syllable on failure.
PhoneLexicon compile_lexicon(const std::vector<LexiconEntry>& entries,
                             Scheme scheme, const Inventory& inv,
                             const MergeRuleSet* merges = nullptr);

struct LexiconStats {
  std::size_t entries = 0;         // distinct words
  std::size_t pronunciations = 0;  // total readings after dedup
  std::size_t variants = 0;        // pronunciations - entries
  std::size_t phone_set_size = 0;

  std::string to_string() const;  // "entries=... variants=... phones=..."
};

LexiconStats lexicon_stats(const PhoneLexicon& lex);

/// Writes lexicon.txt and phones.txt under `dir` (created if missing).
void write_phone_lexicon(const PhoneLexicon& lex,
                         const std::filesystem::path& dir);
PhoneLexicon read_phone_lexicon(const std::filesystem::path& dir, Scheme scheme);

}  // namespace yueasr
