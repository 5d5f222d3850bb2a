#include "yueasr/lexicon.h"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "yueasr/error.h"
#include "yueasr/utf8.h"

namespace yueasr {

namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream is{std::string(s)};
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

void sort_unique(std::vector<PhoneSeq>& prons) {
  std::sort(prons.begin(), prons.end(), [](const PhoneSeq& a, const PhoneSeq& b) {
    return join_labels(a) < join_labels(b);
  });
  prons.erase(std::unique(prons.begin(), prons.end()), prons.end());
}

}  // namespace

std::vector<LexiconEntry> parse_word_lexicon(std::string_view text) {
  std::vector<LexiconEntry> out;
  std::map<std::string, std::size_t> index;
  std::size_t line_no = 0;
  std::istringstream is{std::string(text)};
  std::string line;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw ParseError("lexicon line needs word<TAB>syllables", line_no);
    const std::string word = line.substr(0, tab);
    auto syllables = split_ws(std::string_view(line).substr(tab + 1));
    if (word.empty() || syllables.empty())
      throw ParseError("empty word or pronunciation", line_no);
    const auto chars = utf8::split_code_points(word);
    if (chars.size() != syllables.size())
      throw ParseError("word '" + word + "' has " + std::to_string(chars.size()) +
                           " characters but " + std::to_string(syllables.size()) +
                           " syllables",
                       line_no);
    auto [it, fresh] = index.emplace(word, out.size());
    if (fresh) out.push_back({word, {}});
    out[it->second].pronunciations.push_back(std::move(syllables));
  }
  return out;
}

std::vector<LexiconEntry> read_word_lexicon(const std::filesystem::path& path) {
  return parse_word_lexicon(slurp(path));
}

PhoneLexicon compile_lexicon(const std::vector<LexiconEntry>& entries,
                             Scheme scheme, const Inventory& inv,
                             const MergeRuleSet* merges) {
  PhoneLexicon lex;
  lex.scheme = scheme;
  for (const auto& entry : entries) {
    if (entry.pronunciations.empty())
      throw Error("word '" + entry.word + "' has no pronunciation");
    auto& prons = lex.entries[entry.word];
    for (const auto& reading : entry.pronunciations) {
      PhoneSeq seq;
      for (const auto& s : reading) {
        Syllable syl;
        try {
          syl = inv.parse(s);
        } catch (const Error& e) {
          throw Error("word '" + entry.word + "': syllable '" + s +
                      "': " + e.what());
        }
        if (merges) syl = inv.apply_merge(syl, *merges);
        for (auto& p : inv.to_phones(syl, scheme)) seq.push_back(std::move(p));
      }
      prons.push_back(std::move(seq));
    }
  }
  for (auto& [word, prons] : lex.entries) {
    sort_unique(prons);
    for (const auto& seq : prons) lex.phone_set.insert(seq.begin(), seq.end());
  }
  return lex;
}

std::string LexiconStats::to_string() const {
  return "entries=" + std::to_string(entries) +
         " variants=" + std::to_string(variants) +
         " phones=" + std::to_string(phone_set_size);
}

LexiconStats lexicon_stats(const PhoneLexicon& lex) {
  LexiconStats s;
  s.entries = lex.entries.size();
  for (const auto& [word, prons] : lex.entries) s.pronunciations += prons.size();
  s.variants = s.pronunciations - s.entries;
  s.phone_set_size = lex.phone_set.size();
  return s;
}

void write_phone_lexicon(const PhoneLexicon& lex,
                         const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "lexicon.txt", std::ios::binary);
    if (!out) throw Error("cannot write " + (dir / "lexicon.txt").string());
    for (const auto& [word, prons] : lex.entries) {
      for (const auto& seq : prons) out << word << '\t' << join_labels(seq) << '\n';
    }
    if (!out) throw Error("write failed for " + (dir / "lexicon.txt").string());
  }
  std::vector<std::string> labels;
  for (const auto& p : lex.phone_set) labels.push_back(p.label());
  std::sort(labels.begin(), labels.end());
  std::ofstream out(dir / "phones.txt", std::ios::binary);
  if (!out) throw Error("cannot write " + (dir / "phones.txt").string());
  for (const auto& l : labels) out << l << '\n';
  if (!out) throw Error("write failed for " + (dir / "phones.txt").string());
}

PhoneLexicon read_phone_lexicon(const std::filesystem::path& dir, Scheme scheme) {
  PhoneLexicon lex;
  lex.scheme = scheme;
  std::istringstream is(slurp(dir / "lexicon.txt"));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw ParseError("lexicon.txt line needs word<TAB>phones", line_no);
    PhoneSeq seq;
    for (const auto& label : split_ws(std::string_view(line).substr(tab + 1)))
      seq.push_back(Phone::from_label(label, scheme));
    if (seq.empty()) throw ParseError("empty phone sequence", line_no);
    lex.entries[line.substr(0, tab)].push_back(std::move(seq));
  }
  for (auto& [word, prons] : lex.entries) {
    sort_unique(prons);
    for (const auto& seq : prons) lex.phone_set.insert(seq.begin(), seq.end());
  }
  return lex;
}

}  // namespace yueasr
