#pragma once

// Fixtures and independent reference implementations shared by the unit tests
// and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "yueasr/decoder.h"
#include "yueasr/lattice.h"
#include "yueasr/lexicon.h"
#include "yueasr/ngram_lm.h"
#include "yueasr/phonology.h"

namespace yueasr::testing {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

#ifndef YUEASR_DATA_DIR
#define YUEASR_DATA_DIR "data"
#endif

inline std::string data_path(const std::string& name) {
  return std::string(YUEASR_DATA_DIR) + "/" + name;
}

/// Best path found by plain dynamic programming over every (frame, state)
/// pair. No pruning, no token bookkeeping.
struct OracleResult {
  bool ok = false;
  double score = kNegInf;
  std::vector<int> trace;  // emitting state consumed at each frame
  std::vector<std::string> words;
};

inline OracleResult viterbi_oracle(const SearchGraph& g, const AcousticScorer& sc,
                                   double lm_weight) {
  const int T = sc.num_frames();
  const int S = g.num_states();
  // back[t][s]: predecessor at frame t of the value held by s *after* t frames.
  // kind 0 = arrived over an emitting arc (prev = source state at t-1),
  // kind 1 = entered by epsilon from history state prev in the same frame.
  struct Back { int kind = -1; int prev = -1; int word = -1; };
  std::vector<std::vector<double>> v(T + 1, std::vector<double>(S, kNegInf));
  std::vector<std::vector<Back>> arrive(T + 1, std::vector<Back>(S));
  std::vector<std::vector<Back>> enter(T + 1, std::vector<Back>(S));
  std::vector<std::vector<double>> closed(T + 1, std::vector<double>(S, kNegInf));
  v[0][g.start()] = 0.0;
  for (int t = 0; t <= T; ++t) {
    closed[t] = v[t];
    for (int h = 0; h < S; ++h) {
      if (g.is_emitting(h) || v[t][h] == kNegInf) continue;
      for (const GraphArc* a = g.arcs_begin(h); a != g.arcs_end(h); ++a) {
        const double s = v[t][h] + a->weight + lm_weight * a->lm;
        if (s > closed[t][a->to]) {
          closed[t][a->to] = s;
          enter[t][a->to] = {1, h, a->word};
        }
      }
    }
    if (t == T) break;
    for (int s = 0; s < S; ++s) {
      if (!g.is_emitting(s) || closed[t][s] == kNegInf) continue;
      const double ac = sc.score(t, g.pdf(s));
      for (const GraphArc* a = g.arcs_begin(s); a != g.arcs_end(s); ++a) {
        const double x = closed[t][s] + a->weight + ac;
        if (x > v[t + 1][a->to]) {
          v[t + 1][a->to] = x;
          arrive[t + 1][a->to] = {0, s, -1};
        }
      }
    }
  }
  OracleResult r;
  int best = -1;
  for (int f : g.finals()) {
    if (v[T][f] > r.score) {
      r.score = v[T][f];
      best = f;
    }
  }
  if (best < 0) return r;
  r.ok = true;
  int s = best;
  for (int t = T; t > 0; --t) {
    const Back& b = arrive[t][s];
    s = b.prev;
    r.trace.push_back(s);
    // Undo an epsilon entry into s at frame t-1, if the closed value came from one.
    if (enter[t - 1][s].kind == 1 && closed[t - 1][s] > v[t - 1][s]) {
      r.words.push_back(g.words()[enter[t - 1][s].word]);
      s = enter[t - 1][s].prev;
    }
  }
  std::reverse(r.trace.begin(), r.trace.end());
  std::reverse(r.words.begin(), r.words.end());
  return r;
}

/// Exhaustive enumeration of every complete path. Exponential; for a handful
/// of frames only. Used to validate viterbi_oracle itself.
inline double enumerate_best(const SearchGraph& g, const AcousticScorer& sc, double lm_weight) {
  const int T = sc.num_frames();
  double best = kNegInf;
  std::function<void(int, int, double)> walk = [&](int s, int t, double acc) {
    if (!g.is_emitting(s)) {
      if (t == T) {
        if (g.is_final(s)) best = std::max(best, acc);
        return;
      }
      for (const GraphArc* a = g.arcs_begin(s); a != g.arcs_end(s); ++a) {
        walk(a->to, t, acc + a->weight + lm_weight * a->lm);
      }
      return;
    }
    if (t == T) return;
    const double ac = sc.score(t, g.pdf(s));
    for (const GraphArc* a = g.arcs_begin(s); a != g.arcs_end(s); ++a) {
      walk(a->to, t + 1, acc + a->weight + ac);
    }
  };
  walk(g.start(), 0, 0.0);
  return best;
}

/// Plain Levenshtein distance.
inline std::size_t edit_distance(const std::vector<std::string>& a,
                                 const std::vector<std::string>& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1,
                          d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
  }
  return d[a.size()][b.size()];
}

/// A small randomized decoding problem: up to three one-character words whose
/// pronunciations together use at most three phones (nine emitting states).
struct DecodeFixture {
  SearchGraph graph;
  MatrixScorer scorer;
  double lm_weight = 1.0;
};

inline DecodeFixture random_decode_fixture(std::uint64_t seed, int max_frames = 20) {
  std::mt19937_64 rng(seed);
  static const char* kChars[] = {"甲", "乙", "丙"};
  static const char* kPhones[] = {"aa1", "i2", "ou3", "e4", "o5", "u6"};
  std::vector<int> phone_order = {0, 1, 2, 3, 4, 5};
  std::shuffle(phone_order.begin(), phone_order.end(), rng);
  const int nwords = std::uniform_int_distribution<int>(1, 3)(rng);
  // Phones per word, total ≤ 3.
  std::vector<int> lengths(nwords, 1);
  int spare = 3 - nwords;
  for (int w = 0; w < nwords && spare > 0; ++w) {
    const int extra = std::uniform_int_distribution<int>(0, spare)(rng);
    lengths[w] += extra;
    spare -= extra;
  }
  PhoneLexicon lex;
  lex.scheme = Scheme::kIF;
  int next_phone = 0;
  std::vector<std::string> words;
  for (int w = 0; w < nwords; ++w) {
    PhoneSeq seq;
    for (int k = 0; k < lengths[w]; ++k) {
      seq.push_back(Phone::from_label(kPhones[phone_order[next_phone++]], Scheme::kIF));
    }
    lex.phone_set.insert(seq.begin(), seq.end());
    lex.entries[kChars[w]].push_back(seq);
    words.push_back(kChars[w]);
  }
  std::vector<Sentence> corpus;
  std::uniform_int_distribution<int> pick(0, nwords - 1);
  for (int i = 0; i < 6; ++i) {
    Sentence s;
    const int len = std::uniform_int_distribution<int>(1, 4)(rng);
    for (int k = 0; k < len; ++k) s.push_back(words[pick(rng)]);
    corpus.push_back(s);
  }
  DecodeFixture f;
  f.graph = build_graph(lex, train_ngram(corpus, 2, Smoothing::kWittenBell));
  const int frames = std::uniform_int_distribution<int>(3, max_frames)(rng);
  const int labels = f.graph.num_pdfs();
  std::normal_distribution<float> noise(0.0f, 3.0f);
  std::vector<float> data(static_cast<std::size_t>(frames) * labels);
  for (float& x : data) x = noise(rng);
  f.scorer = MatrixScorer(frames, labels, std::move(data));
  f.lm_weight = std::uniform_real_distribution<double>(0.5, 10.0)(rng);
  return f;
}

inline DecodeParams unpruned(double lm_weight) {
  DecodeParams p;
  p.beam = DecodeParams::kInfiniteBeam;
  p.max_active = DecodeParams::kUnlimitedActive;
  p.lm_weight = lm_weight;
  p.keep_state_trace = true;
  return p;
}

/// Two one-phone words over exactly three frames. Word B's true path trails
/// the best token by 14 after the first frame and wins overall, so beams
/// below 14 prune it and beams above keep it.
struct BeamFlipFixture {
  SearchGraph graph;
  MatrixScorer scorer;
  std::string truth = "乙";
  std::string decoy = "甲";
};

inline BeamFlipFixture beam_flip_fixture() {
  PhoneLexicon lex;
  lex.scheme = Scheme::kIF;
  const Phone a = Phone::from_label("aa1", Scheme::kIF);
  const Phone b = Phone::from_label("i2", Scheme::kIF);
  lex.entries["甲"].push_back({a});
  lex.entries["乙"].push_back({b});
  lex.phone_set = {a, b};
  // Equal counts make both entries equally likely after every history.
  const std::vector<Sentence> corpus = {{"甲"}, {"乙"}, {"甲", "乙"}, {"乙", "甲"},
                                        {"甲", "甲"}, {"乙", "乙"}};
  BeamFlipFixture f;
  f.graph = build_graph(lex, train_ngram(corpus, 2, Smoothing::kNone));
  const int labels = f.graph.num_pdfs();  // aa1.0-2 then i2.0-2
  const double a_scores[3] = {0.0, -10.0, -10.0};
  const double b_scores[3] = {-14.0, 0.0, 0.0};
  std::vector<float> data(3 * static_cast<std::size_t>(labels));
  for (int t = 0; t < 3; ++t) {
    for (int k = 0; k < 3; ++k) {
      data[t * labels + k] = static_cast<float>(a_scores[t]);
      data[t * labels + 3 + k] = static_cast<float>(b_scores[t]);
    }
  }
  f.scorer = MatrixScorer(3, labels, std::move(data));
  return f;
}

/// Word lattice for the 乳糖 / 魚塘 confusion after 該 罐裝 奶 含 天然. The
/// first-pass scores favour 魚塘.
inline Lattice lactose_lattice() {
  Lattice lat;
  const char* prefix[] = {"該", "罐裝", "奶", "含", "天然"};
  for (int i = 0; i <= 5; ++i) lat.add_node(i * 30);
  for (int i = 0; i < 5; ++i) lat.add_arc({i, i + 1, prefix[i], -30.0, -2.0});
  const int end = lat.add_node(180);
  lat.add_arc({5, end, "乳糖", -40.0, -3.0});
  lat.add_arc({5, end, "魚塘", -40.0, -2.0});
  lat.set_start(0);
  lat.add_final(end);
  return lat;
}

/// Hand-built word 4-gram in which 乳糖 is likely three words after 奶 and
/// 魚塘 is not. Everything else backs off to a uniform unigram.
inline NGramModel lactose_4gram() {
  const std::vector<std::string> words = {"該", "罐裝", "奶", "含", "天然", "乳糖", "魚塘"};
  NGramModel m(4, words);
  const double uni = -std::log10(static_cast<double>(words.size()) + 1.0);
  for (int id = 0; id < static_cast<int>(m.vocab_size()); ++id) {
    if (id == NGramModel::kBos || id == NGramModel::kUnk) continue;
    m.mutable_table(1)[{id}] = {uni, 0.0};
  }
  const int milk = m.id("奶"), has = m.id("含"), natural = m.id("天然");
  m.mutable_table(2)[{milk, has}] = {-0.5, 0.0};
  m.mutable_table(2)[{has, natural}] = {-0.5, 0.0};
  m.mutable_table(3)[{milk, has, natural}] = {-0.3, 0.0};
  m.mutable_table(4)[{milk, has, natural, m.id("乳糖")}] = {-0.1, 0.0};
  m.mutable_table(4)[{milk, has, natural, m.id("魚塘")}] = {-3.0, 0.0};
  for (int n = 4; n >= 2; --n) m.normalize_backoffs(n);
  return m;
}

}  // namespace yueasr::testing
