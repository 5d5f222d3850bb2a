#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "support.h"
#include "yueasr/error.h"
#include "yueasr/lexicon.h"

using namespace yueasr;
namespace fs = std::filesystem;

namespace {

const Inventory& inv() { return Inventory::bundled(); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path temp_dir(const std::string& name) {
  fs::path d = fs::temp_directory_path() / ("yueasr_test_" + name);
  fs::remove_all(d);
  return d;
}

}  // namespace

TEST_CASE("compile examples") {
  const auto words = parse_word_lexicon("令狐\tling4 wu4\n");
  const PhoneLexicon onc = compile_lexicon(words, Scheme::kONC, inv());
  REQUIRE(onc.entries.at("令狐").size() == 1);
  CHECK(join_labels(onc.entries.at("令狐")[0]) == "l i4 _ng4 w u4");
  const PhoneLexicon iff = compile_lexicon(words, Scheme::kIF, inv());
  CHECK(join_labels(iff.entries.at("令狐")[0]) == "l ing4 w u4");
}

TEST_CASE("lexicon input errors") {
  CHECK_THROWS_AS(parse_word_lexicon("令狐 ling4 wu4\n"), ParseError);
  CHECK_THROWS_AS(parse_word_lexicon("令狐\tling4\n"), ParseError);
  const auto bad = parse_word_lexicon("令\tlong9\n");
  CHECK_THROWS_AS(compile_lexicon(bad, Scheme::kIF, inv()), Error);
}

TEST_CASE("repeated words accumulate readings") {
  const auto words = parse_word_lexicon("生\tsang1\n生\tsaang1\n生\tsang1\n");
  REQUIRE(words.size() == 1);
  const PhoneLexicon lex = compile_lexicon(words, Scheme::kIF, inv());
  CHECK(lex.entries.at("生").size() == 2);
  const LexiconStats st = lexicon_stats(lex);
  CHECK(st.entries == 1);
  CHECK(st.pronunciations == 2);
  CHECK(st.variants == 1);
}

TEST_CASE("merge makes baat3 and baak3 collide in both schemes") {
  const auto words = parse_word_lexicon("八\tbaat3\n百\tbaak3\n逼\tbik1\n");
  const MergeRuleSet rules = MergeRuleSet::parse("t>k");
  for (Scheme sc : {Scheme::kIF, Scheme::kONC}) {
    const PhoneLexicon plain = compile_lexicon(words, sc, inv());
    CHECK(plain.entries.at("八") != plain.entries.at("百"));
    const PhoneLexicon merged = compile_lexicon(words, sc, inv(), &rules);
    CHECK(merged.entries.at("八") == merged.entries.at("百"));
  }
}

TEST_CASE("write and read back") {
  const auto words = read_word_lexicon(testing::data_path("demo_lexicon.tsv"));
  for (Scheme sc : {Scheme::kIF, Scheme::kONC}) {
    const PhoneLexicon lex = compile_lexicon(words, sc, inv());
    const fs::path a = temp_dir("lex_a"), b = temp_dir("lex_b");
    write_phone_lexicon(lex, a);
    write_phone_lexicon(compile_lexicon(words, sc, inv()), b);
    CHECK(slurp(a / "lexicon.txt") == slurp(b / "lexicon.txt"));
    CHECK(slurp(a / "phones.txt") == slurp(b / "phones.txt"));
    CHECK(read_phone_lexicon(a, sc) == lex);
    fs::remove_all(a);
    fs::remove_all(b);
  }
}

TEST_CASE("two pronunciations give two lines in stable order") {
  const auto words = parse_word_lexicon("行\thong4\n行\thaang4\n");
  const PhoneLexicon lex = compile_lexicon(words, Scheme::kIF, inv());
  const fs::path d = temp_dir("lex_two");
  write_phone_lexicon(lex, d);
  CHECK(slurp(d / "lexicon.txt") == "行\th aang4\n行\th ong4\n");
  fs::remove_all(d);
}

TEST_CASE("demo lexicon: ONC phone set is smaller") {
  const auto words = read_word_lexicon(testing::data_path("demo_lexicon.tsv"));
  const PhoneLexicon iff = compile_lexicon(words, Scheme::kIF, inv());
  const PhoneLexicon onc = compile_lexicon(words, Scheme::kONC, inv());
  CHECK(onc.phone_set.size() <= iff.phone_set.size());
  CHECK(iff.entries.size() == onc.entries.size());
}
