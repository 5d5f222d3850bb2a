#include <cmath>
#include <filesystem>
#include <map>
#include <set>

#include "doctest.h"
#include "support.h"
#include "yueasr/decoder.h"
#include "yueasr/error.h"

using namespace yueasr;
using testing::random_decode_fixture;
using testing::unpruned;

namespace {

PhoneLexicon one_word(const char* word, std::initializer_list<const char*> phones) {
  PhoneLexicon lex;
  PhoneSeq seq;
  for (const char* p : phones) seq.push_back(Phone::from_label(p, Scheme::kIF));
  lex.entries[word].push_back(seq);
  lex.phone_set.insert(seq.begin(), seq.end());
  return lex;
}

NGramModel tiny_lm(const std::vector<std::string>& words) {
  std::vector<Sentence> corpus;
  for (const auto& w : words) corpus.push_back({w});
  return train_ngram(corpus, 2, Smoothing::kWittenBell);
}

struct ArcCounts {
  int emitting_states = 0, self_loops = 0, forward = 0, epsilon = 0;
};

ArcCounts count_arcs(const SearchGraph& g) {
  ArcCounts c;
  for (int s = 0; s < g.num_states(); ++s) {
    if (g.is_emitting(s)) ++c.emitting_states;
    for (const GraphArc* a = g.arcs_begin(s); a != g.arcs_end(s); ++a) {
      if (a->pdf == kNoPdf) {
        ++c.epsilon;
      } else if (a->to == s) {
        ++c.self_loops;
      } else {
        ++c.forward;
      }
    }
  }
  return c;
}

// Keep only the single best token each frame (ties to the lower state).
double greedy_oracle(const SearchGraph& g, const AcousticScorer& sc, double lm_weight,
                     int* final_state) {
  int state = g.start();
  double score = 0.0;
  for (int t = 0; t < sc.num_frames(); ++t) {
    std::map<int, double> closed = {{state, score}};
    if (!g.is_emitting(state)) {
      for (const GraphArc* a = g.arcs_begin(state); a != g.arcs_end(state); ++a) {
        const double x = score + a->weight + lm_weight * a->lm;
        auto it = closed.find(a->to);
        if (it == closed.end() || x > it->second) closed[a->to] = x;
      }
    }
    std::map<int, double> next;
    for (const auto& [s, v] : closed) {
      if (!g.is_emitting(s)) continue;
      const double ac = sc.score(t, g.pdf(s));
      for (const GraphArc* a = g.arcs_begin(s); a != g.arcs_end(s); ++a) {
        const double x = v + a->weight + ac;
        auto it = next.find(a->to);
        if (it == next.end() || x > it->second) next[a->to] = x;
      }
    }
    if (next.empty()) return testing::kNegInf;
    state = -1;
    for (const auto& [s, v] : next) {
      if (state < 0 || v > score) {
        state = s;
        score = v;
      }
    }
  }
  *final_state = state;
  return g.is_final(state) ? score : testing::kNegInf;
}

}  // namespace

TEST_CASE("one word with two phones") {
  const SearchGraph g = build_graph(one_word("令", {"l", "ing4"}), tiny_lm({"令"}));
  const ArcCounts c = count_arcs(g);
  CHECK(c.emitting_states == 6);
  CHECK(c.self_loops == 6);
  CHECK(c.forward == 6);
  CHECK(c.epsilon == 2);  // entry from <s> and from the 令 history
  CHECK(g.num_states() == 8);
  CHECK(g.num_pdfs() == 6);
  CHECK(g.pdf_labels().front() == "ing4.0");
  CHECK_FALSE(g.is_final(g.start()));
  // Default transitions are log 0.5 both ways.
  for (int s = 0; s < g.num_states(); ++s) {
    if (!g.is_emitting(s)) continue;
    for (const GraphArc* a = g.arcs_begin(s); a != g.arcs_end(s); ++a) {
      CHECK(a->weight == doctest::Approx(std::log(0.5)));
    }
  }
}

TEST_CASE("empty lexicon and bad LM order are rejected") {
  CHECK_THROWS_AS(build_graph(PhoneLexicon{}, tiny_lm({"甲"})), Error);
  const NGramModel tri = train_ngram({{"令"}}, 3, Smoothing::kNone);
  CHECK_THROWS_AS(build_graph(one_word("令", {"l", "ing4"}), tri), Error);
}

TEST_CASE("homophones share chains but not word outputs") {
  PhoneLexicon lex = one_word("行", {"h", "ong4"});
  lex.entries["杭"].push_back(lex.entries.at("行")[0]);
  const SearchGraph g = build_graph(lex, tiny_lm({"行", "杭"}));
  std::map<int, std::vector<int>> pdf_chain_by_word;
  for (const GraphArc* a = g.arcs_begin(g.start()); a != g.arcs_end(g.start()); ++a) {
    std::vector<int> pdfs;
    for (int s = a->to; g.is_emitting(s);) {
      pdfs.push_back(g.pdf(s));
      const GraphArc* f = g.arcs_begin(s);
      while (f->to == s) ++f;
      s = f->to;
    }
    pdf_chain_by_word[a->word] = pdfs;
  }
  REQUIRE(pdf_chain_by_word.size() == 2);
  CHECK(pdf_chain_by_word.begin()->second == pdf_chain_by_word.rbegin()->second);
}

TEST_CASE("IF and ONC graphs differ only in alphabets and chain lengths") {
  const auto words = read_word_lexicon(testing::data_path("demo_lexicon.tsv"));
  const NGramModel lm =
      train_ngram(read_corpus(testing::data_path("demo_corpus.txt")), 2, Smoothing::kWittenBell);
  const Inventory& inv = Inventory::bundled();
  const SearchGraph gi = build_graph(compile_lexicon(words, Scheme::kIF, inv), lm);
  const SearchGraph go = build_graph(compile_lexicon(words, Scheme::kONC, inv), lm);
  CHECK(gi.words() == go.words());
  CHECK(gi.history_chars() == go.history_chars());
  for (int h = 0; h < static_cast<int>(gi.history_chars().size()); ++h) {
    for (int w = 0; w < static_cast<int>(gi.words().size()); ++w) {
      CHECK(gi.entry_lm(h, w) == go.entry_lm(h, w));
    }
  }
  CHECK(gi.pdf_labels() != go.pdf_labels());
  CHECK(go.num_pdfs() < gi.num_pdfs());
}

TEST_CASE("graph text round trip") {
  const auto f = random_decode_fixture(5);
  const std::string text = f.graph.to_text();
  const SearchGraph back = SearchGraph::from_text(text);
  CHECK(back.to_text() == text);
  CHECK(back.num_states() == f.graph.num_states());
  CHECK_THROWS_AS(SearchGraph::from_text("GRAPH v2\n"), ParseError);
}

TEST_CASE("score matrix binary round trip") {
  const auto f = random_decode_fixture(6);
  const std::string bytes = f.scorer.to_bytes();
  CHECK(bytes.substr(0, 4) == "FSCR");
  CHECK(bytes.size() == 12 + 4 * f.scorer.data().size());
  const MatrixScorer back = MatrixScorer::from_bytes(bytes);
  CHECK(back.data() == f.scorer.data());
  CHECK(back.audio_seconds() == doctest::Approx(f.scorer.num_frames() * 0.01));
  CHECK_THROWS_AS(MatrixScorer::from_bytes("FSCX"), Error);
}

TEST_CASE("the DP oracle agrees with exhaustive enumeration") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto f = random_decode_fixture(1000 + seed, 7);
    const auto o = testing::viterbi_oracle(f.graph, f.scorer, f.lm_weight);
    const double e = testing::enumerate_best(f.graph, f.scorer, f.lm_weight);
    CHECK(o.ok == std::isfinite(e));
    if (o.ok) CHECK(std::abs(o.score - e) < 1e-9);
  }
}

TEST_CASE("unpruned decode matches the Viterbi oracle") {
  int compared = 0;
  for (std::uint64_t seed = 0; seed < 80; ++seed) {
    const auto f = random_decode_fixture(seed);
    const auto o = testing::viterbi_oracle(f.graph, f.scorer, f.lm_weight);
    if (!o.ok) {
      CHECK_THROWS_AS(decode(f.graph, f.scorer, unpruned(f.lm_weight)), DecodeError);
      continue;
    }
    const DecodeResult r = decode(f.graph, f.scorer, unpruned(f.lm_weight));
    CHECK(std::abs(r.score - o.score) < 1e-9);
    CHECK(r.state_trace == o.trace);
    CHECK(r.hypothesis.words == o.words);
    CHECK(r.hypothesis.combined() == doctest::Approx(r.score).epsilon(1e-9));
    ++compared;
  }
  CHECK(compared >= 50);
}

TEST_CASE("best score does not fall as the beam widens") {
  for (std::uint64_t seed = 0; seed < 80; ++seed) {
    const auto f = random_decode_fixture(seed);
    double prev = testing::kNegInf;
    for (double beam : {5.0, 10.0, 15.0, DecodeParams::kInfiniteBeam}) {
      DecodeParams p = unpruned(f.lm_weight);
      p.beam = beam;
      double s = testing::kNegInf;
      try {
        s = decode(f.graph, f.scorer, p).score;
      } catch (const DecodeError&) {
      }
      CHECK(s >= prev);
      prev = s;
    }
  }
}

TEST_CASE("designed fixture flips between beam 13 and 15") {
  const auto f = testing::beam_flip_fixture();
  auto run = [&](double beam) {
    DecodeParams p;
    p.beam = beam;
    p.lm_weight = 1.0;
    return decode(f.graph, f.scorer, p);
  };
  CHECK(run(13.0).hypothesis.text() == f.decoy);
  CHECK(run(15.0).hypothesis.text() == f.truth);
  CHECK(run(DecodeParams::kInfiniteBeam).hypothesis.text() == f.truth);
  CHECK(run(13.0).score < run(15.0).score);
  const auto o = testing::viterbi_oracle(f.graph, f.scorer, 1.0);
  CHECK(o.words == std::vector<std::string>{f.truth});
}

TEST_CASE("max_active 1 is greedy") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto f = random_decode_fixture(seed);
    int final_state = -1;
    const double g = greedy_oracle(f.graph, f.scorer, f.lm_weight, &final_state);
    DecodeParams p = unpruned(f.lm_weight);
    p.max_active = 1;
    if (!std::isfinite(g)) {
      CHECK_THROWS_AS(decode(f.graph, f.scorer, p), DecodeError);
      continue;
    }
    CHECK(decode(f.graph, f.scorer, p).score == doctest::Approx(g).epsilon(1e-12));
  }
}

TEST_CASE("decode is deterministic") {
  const auto f = random_decode_fixture(77);
  DecodeParams p;
  p.lm_weight = f.lm_weight;
  p.beam = 8.0;
  try {
    const DecodeResult a = decode(f.graph, f.scorer, p), b = decode(f.graph, f.scorer, p);
    CHECK(a.hypothesis.words == b.hypothesis.words);
    CHECK(a.score == b.score);
    CHECK(a.lattice == b.lattice);
    CHECK(a.stats.tokens_expanded == b.stats.tokens_expanded);
    CHECK(a.stats.active_tokens_mean == b.stats.active_tokens_mean);
  } catch (const DecodeError&) {
    CHECK_THROWS_AS(decode(f.graph, f.scorer, p), DecodeError);
  }
}

TEST_CASE("decoder lattice contains the best hypothesis") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto f = random_decode_fixture(seed);
    DecodeParams p = unpruned(f.lm_weight);
    DecodeResult r;
    try {
      r = decode(f.graph, f.scorer, p);
    } catch (const DecodeError&) {
      continue;
    }
    CHECK_NOTHROW(r.lattice.validate());
    const Hypothesis lb = best_path(r.lattice, f.lm_weight);
    CHECK(lb.words == r.hypothesis.words);
    CHECK(lb.combined() == doctest::Approx(r.score).epsilon(1e-9));
  }
}

TEST_CASE("defaults and stats") {
  const DecodeParams p;
  CHECK(p.beam == 15.0);
  CHECK(p.max_active == 7000);
  const auto f = testing::beam_flip_fixture();
  const DecodeResult r = decode(f.graph, f.scorer, p);
  CHECK(r.stats.beam == 15.0);
  CHECK(r.stats.max_active == 7000);
  CHECK(r.stats.frames == 3);
  CHECK(r.stats.audio_seconds == doctest::Approx(0.03));
  const std::string js = r.stats.to_json();
  for (const char* key : {"\"frames\"", "\"active_tokens_mean\"", "\"wall_seconds\"",
                          "\"audio_seconds\"", "\"rtf\""}) {
    CHECK(js.find(key) != std::string::npos);
  }
}

TEST_CASE("too few frames or a tight beam raise DecodeError") {
  const auto f = testing::beam_flip_fixture();
  const MatrixScorer two(2, f.graph.num_pdfs(), std::vector<float>(2 * f.graph.num_pdfs(), 0.0f));
  CHECK_THROWS_AS(decode(f.graph, two), DecodeError);
  DecodeParams bad;
  bad.beam = 0.0;
  CHECK_THROWS_AS(decode(f.graph, f.scorer, bad), Error);
}

TEST_CASE("batch decode and RTF arithmetic") {
  CHECK(aggregate_rtf({2.5}, {1.8}) == doctest::Approx(1.3889).epsilon(1e-4));
  const auto f = testing::beam_flip_fixture();
  CHECK_THROWS_AS(batch_decode(f.graph, {}), Error);
  const MatrixScorer two(2, f.graph.num_pdfs(), std::vector<float>(2 * f.graph.num_pdfs(), 0.0f));
  const BatchResult br = batch_decode(f.graph, {&f.scorer, &two, &f.scorer}, {}, 2);
  REQUIRE(br.items.size() == 3);
  CHECK(br.items[0].ok);
  CHECK_FALSE(br.items[1].ok);
  CHECK(br.failures == 1);
  CHECK(br.audio_seconds == doctest::Approx(0.08));
  CHECK(br.items[2].result.hypothesis.words == br.items[0].result.hypothesis.words);
}
