#include <cmath>
#include <random>

#include "doctest.h"
#include "support.h"
#include "yueasr/acoustic_sim.h"
#include "yueasr/config.h"
#include "yueasr/error.h"
#include "yueasr/eval.h"

using namespace yueasr;

namespace {

const Inventory& inv() { return Inventory::bundled(); }

double dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

PhoneSeq phones_of(const std::vector<std::string>& syllables, Scheme sc) {
  PhoneSeq out;
  for (const auto& s : syllables) {
    const PhoneSeq p = inv().to_phones(inv().parse(s), sc);
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

}  // namespace

TEST_CASE("config parsing") {
  const KeyValues kv = parse_key_values("# c\na = 1\nb=two # trailing\n\n");
  CHECK(kv.at("a").value == "1");
  CHECK(kv.at("b").value == "two");
  CHECK(kv.at("b").line == 3);
  CHECK_THROWS_AS(parse_key_values("a = 1\na = 2\n"), ParseError);
  CHECK_THROWS_AS(parse_key_values("just words\n"), ParseError);
  CHECK(config_double(kv, "a", 0.0) == 1.0);
  CHECK(config_double(kv, "missing", 2.5) == 2.5);
  CHECK_THROWS_AS(config_int(kv, "b", 0), Error);
}

TEST_CASE("sim config") {
  const SimConfig c = parse_sim_config(
      "seed = 9\nframes_per_state = 3\nfeature_dim = 4\nnoise_sigma = 0.5\n"
      "confusion = _k3:_t3:1, aak3:aat3:0.25\n");
  CHECK(c.seed == 9);
  CHECK(c.min_frames_per_state == 3);
  CHECK(c.max_frames_per_state == 3);
  CHECK(c.feature_dim == 4);
  REQUIRE(c.confusion.size() == 2);
  CHECK(c.confusion[1].a == "aak3");
  CHECK(c.confusion[1].b == "aat3");
  CHECK(c.confusion[1].p == 0.25);
  CHECK(parse_sim_config("frames_per_state = 2..6\n").max_frames_per_state == 6);
  CHECK_THROWS_AS(parse_sim_config("frames_per_state = 0\n"), Error);
  CHECK_THROWS_AS(parse_sim_config("noise_sigma = -1\n"), Error);
  CHECK_THROWS_AS(parse_sim_config("confusion = a:b:1.5\n"), Error);
  CHECK_THROWS_AS(parse_confusions("a-b"), Error);
}

TEST_CASE("state models are deterministic and separated") {
  const PhoneLexicon lex = compile_lexicon(
      read_word_lexicon(testing::data_path("demo_lexicon.tsv")), Scheme::kONC, inv());
  const auto labels = pdf_labels_for(lex);
  SimConfig cfg;
  cfg.seed = 3;
  cfg.noise_sigma = 1.5;
  cfg.mean_spread = 2.5;
  const StateModel a = build_state_models(labels, cfg), b = build_state_models(labels, cfg);
  for (int i = 0; i < static_cast<int>(labels.size()); ++i) CHECK(a.mean(i) == b.mean(i));
  for (int i = 0; i < static_cast<int>(labels.size()); ++i) {
    for (int j = i + 1; j < static_cast<int>(labels.size()); ++j) {
      REQUIRE(dist(a.mean(i), a.mean(j)) >= 4.0 * cfg.noise_sigma);
    }
  }
  cfg.seed = 4;
  CHECK(build_state_models(labels, cfg).mean(0) != a.mean(0));
  CHECK_THROWS_AS(build_state_models({}, cfg), Error);
}

TEST_CASE("confusion blends means") {
  const std::vector<std::string> labels = {"_k3.0", "_k3.1", "_k3.2", "_t3.0", "_t3.1", "_t3.2"};
  SimConfig cfg;
  cfg.seed = 1;
  const StateModel base = build_state_models(labels, cfg);
  SimConfig half = cfg;
  half.confusion = {{"_k3", "_t3", 0.0}};
  CHECK(build_state_models(labels, half).mean(3) == base.mean(3));
  half.confusion = {{"_k3", "_t3", 1.0}};
  const StateModel one = build_state_models(labels, half);
  for (int k = 0; k < 3; ++k) CHECK(one.mean(3 + k) == one.mean(k));
  half.confusion = {{"_k3", "_t3", 0.5}};
  const StateModel mid = build_state_models(labels, half);
  for (int d = 0; d < cfg.feature_dim; ++d) {
    CHECK(mid.mean(4)[d] == doctest::Approx(0.5 * base.mean(1)[d] + 0.5 * base.mean(4)[d]));
  }
  half.confusion = {{"_k3", "_x3", 0.5}};
  CHECK_THROWS_AS(build_state_models(labels, half), Error);

  // p = 1 makes the two labels indistinguishable frame by frame.
  const PhoneSeq seq = phones_of({"baak3"}, Scheme::kONC);
  std::vector<std::string> all = labels;
  for (const char* l : {"b.0", "b.1", "b.2", "aa3.0", "aa3.1", "aa3.2"}) all.push_back(l);
  SimConfig c1 = cfg;
  c1.confusion = {{"_k3", "_t3", 1.0}};
  const StateModel m = build_state_models(all, c1);
  const SimulatedUtterance u = simulate_utterance(seq, m, c1, 5);
  for (int t = 0; t < u.scorer.num_frames(); ++t) {
    for (int k = 0; k < 3; ++k) {
      CHECK(std::abs(u.scorer.score(t, m.index("_k3." + std::to_string(k))) -
                     u.scorer.score(t, m.index("_t3." + std::to_string(k)))) < 1e-9);
    }
  }
}

TEST_CASE("simulation is deterministic and annotated") {
  const PhoneSeq seq = phones_of({"ling4", "wu4"}, Scheme::kIF);
  PhoneLexicon lex;
  lex.phone_set.insert(seq.begin(), seq.end());
  SimConfig cfg;
  cfg.seed = 2;
  const StateModel m = build_state_models(pdf_labels_for(lex), cfg);
  const SimulatedUtterance a = simulate_utterance(seq, m, cfg, 17);
  const SimulatedUtterance b = simulate_utterance(seq, m, cfg, 17);
  CHECK(a.scorer.to_bytes() == b.scorer.to_bytes());
  CHECK(a.scorer.audio_seconds() == doctest::Approx(a.scorer.num_frames() * 0.01));
  CHECK(a.scorer.num_frames() >= 12 * 2);
  CHECK(a.scorer.num_frames() <= 12 * 5);
  CHECK(simulate_utterance(seq, m, cfg, 18).scorer.to_bytes() != a.scorer.to_bytes());
  const std::vector<int> dur(12, 3);
  CHECK(simulate_utterance(seq, m, cfg, 17, &dur).scorer.num_frames() == 36);
  const std::vector<int> short_dur(11, 3);
  CHECK_THROWS_AS(simulate_utterance(seq, m, cfg, 17, &short_dur), Error);
  CHECK_THROWS_AS(simulate_utterance(phones_of({"sik1"}, Scheme::kIF), m, cfg, 1), Error);
}

TEST_CASE("noiseless frames score best under their generating label") {
  const auto words = read_word_lexicon(testing::data_path("demo_lexicon.tsv"));
  const PhoneLexicon lex = compile_lexicon(words, Scheme::kIF, inv());
  SimConfig cfg;
  cfg.seed = 8;
  cfg.noise_sigma = 0.0;
  const StateModel m = build_state_models(pdf_labels_for(lex), cfg);
  for (const auto& [word, prons] : lex.entries) {
    const SimulatedUtterance u = simulate_utterance(prons[0], m, cfg, 1);
    for (int t = 0; t < u.scorer.num_frames(); ++t) {
      int best = 0;
      for (int l = 1; l < u.scorer.num_labels(); ++l) {
        if (u.scorer.score(t, l) > u.scorer.score(t, best)) best = l;
      }
      REQUIRE(best == u.frame_labels[t]);
    }
  }
}

TEST_CASE("noiseless simulation decodes exactly") {
  const auto words = read_word_lexicon(testing::data_path("demo_lexicon.tsv"));
  const NGramModel lm =
      train_ngram(read_corpus(testing::data_path("demo_corpus.txt")), 2, Smoothing::kWittenBell);
  std::mt19937_64 rng(4);
  for (Scheme sc : {Scheme::kIF, Scheme::kONC}) {
    const PhoneLexicon lex = compile_lexicon(words, sc, inv());
    const SearchGraph g = build_graph(lex, lm);
    SimConfig cfg;
    cfg.seed = 8;
    cfg.noise_sigma = 0.0;
    const StateModel m = build_state_models(g.pdf_labels(), cfg);
    std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
    for (int i = 0; i < 10; ++i) {
      std::string ref;
      PhoneSeq seq;
      for (int w = 0; w < 3; ++w) {
        const LexiconEntry& e = words[pick(rng)];
        ref += e.word;
        for (const auto& syl : e.pronunciations[0]) {
          const PhoneSeq p = inv().to_phones(inv().parse(syl), sc);
          seq.insert(seq.end(), p.begin(), p.end());
        }
      }
      const SimulatedUtterance u = simulate_utterance(seq, m, cfg, 100 + i);
      DecodeParams p;
      p.beam = DecodeParams::kInfiniteBeam;
      p.max_active = DecodeParams::kUnlimitedActive;
      p.lm_weight = 1.0;
      p.build_lattice = false;
      const DecodeResult r = decode(g, u.scorer, p);
      // Homographs with different segmentations are fine; characters must match.
      CHECK(wer(ref, r.hypothesis.text()).errors() == 0);
    }
  }
}

TEST_CASE("WER does not fall as confusion grows") {
  // Two words that differ only in the coda of an IF final: 八 baat3, 百 baak3.
  const auto words = parse_word_lexicon("八\tbaat3\n百\tbaak3\n");
  const NGramModel lm = train_ngram({{"八"}, {"百"}}, 2, Smoothing::kWittenBell);
  const PhoneLexicon lex = compile_lexicon(words, Scheme::kIF, inv());
  const SearchGraph g = build_graph(lex, lm);
  std::vector<double> rates;
  for (double p : {0.0, 0.5, 1.0}) {
    SimConfig cfg;
    cfg.seed = 12;
    cfg.noise_sigma = 1.0;
    cfg.model_sigma = 1.0;
    cfg.confusion = {{"aak3", "aat3", p}, {"aat3", "aak3", p}};
    const StateModel m = build_state_models(g.pdf_labels(), cfg);
    std::vector<std::pair<std::string, std::string>> pairs;
    for (int i = 0; i < 40; ++i) {
      const bool eight = i % 2 == 0;
      const SimulatedUtterance u =
          simulate_utterance(phones_of({eight ? "baat3" : "baak3"}, Scheme::kIF), m, cfg, i);
      DecodeParams dp;
      dp.lm_weight = 1.0;
      std::string hyp;
      try {
        hyp = decode(g, u.scorer, dp).hypothesis.text();
      } catch (const DecodeError&) {
      }
      pairs.emplace_back(eight ? "八" : "百", hyp);
    }
    rates.push_back(corpus_wer(pairs).rate());
  }
  CHECK(rates[0] <= rates[1]);
  CHECK(rates[1] <= rates[2]);
  CHECK(rates[2] > 0.0);
}
