#include "yueasr/decoder.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "yueasr/utf8.h"

namespace yueasr {

namespace {

constexpr double kLn10 = 2.302585092994045684;

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::vector<std::string> pdf_labels_for(const PhoneLexicon& lex) {
  std::vector<std::string> out;
  out.reserve(lex.phone_set.size() * 3);
  for (const Phone& p : lex.phone_set) {
    const std::string label = p.label();
    for (int k = 0; k < 3; ++k) out.push_back(label + "." + std::to_string(k));
  }
  return out;
}

SearchGraph build_graph(const PhoneLexicon& lex, const NGramModel& lm,
                        const TransitionParams& transitions) {
  if (lex.entries.empty()) throw Error("cannot build graph: empty lexicon");
  if (lm.order() != 2) {
    throw Error("cannot build graph: language model order must be 2, got " +
                std::to_string(lm.order()));
  }
  if (!(transitions.self_loop > 0.0) || !(transitions.forward > 0.0)) {
    throw Error("transition probabilities must be positive");
  }

  SearchGraph g;
  g.pdf_labels_ = pdf_labels_for(lex);
  std::map<std::string, int> pdf_base;  // phone label -> first pdf id
  {
    int i = 0;
    for (const Phone& p : lex.phone_set) {
      pdf_base[p.label()] = i;
      i += 3;
    }
  }

  // Words, their characters and LM ids.
  std::vector<std::vector<int>> word_ids;
  std::set<std::string> unknown_chars;
  for (const auto& [word, prons] : lex.entries) {
    g.words_.push_back(word);
    std::vector<int> ids;
    for (const std::string& c : utf8::split_code_points(word)) {
      if (!lm.contains(c)) unknown_chars.insert(c);
      ids.push_back(lm.id(c));
    }
    word_ids.push_back(std::move(ids));
  }
  for (const std::string& c : unknown_chars) {
    g.warnings_.push_back("character " + c + " not in LM vocabulary, mapped to " +
                          kUnknown);
  }

  // History states: start (<s>) then one per distinct word-final character.
  std::map<std::string, int> history_index;
  g.history_chars_.push_back(kSentenceBegin);
  std::vector<int> history_lm_id{NGramModel::kBos};
  for (const std::string& word : g.words_) {
    std::string last = utf8::split_code_points(word).back();
    history_index.emplace(last, 0);
  }
  for (auto& [c, idx] : history_index) {
    idx = static_cast<int>(g.history_chars_.size());
    g.history_chars_.push_back(c);
    history_lm_id.push_back(lm.id(c));
  }
  const int num_hist = static_cast<int>(g.history_chars_.size());
  const int num_words = static_cast<int>(g.words_.size());

  g.entry_lm_.assign(static_cast<std::size_t>(num_hist) * num_words, 0.0);
  for (int h = 0; h < num_hist; ++h) {
    for (int w = 0; w < num_words; ++w) {
      int prev = history_lm_id[h];
      double lp = 0.0;
      for (int c : word_ids[w]) {
        lp += lm.logprob(std::span<const int>(&prev, 1), c);
        prev = c;
      }
      g.entry_lm_[static_cast<std::size_t>(h) * num_words + w] = lp * kLn10;
    }
  }

  // States 0..num_hist-1 are history states; emitting states follow.
  for (int h = 0; h < num_hist; ++h) {
    g.state_pdf_.push_back(kNoPdf);
    g.state_history_.push_back(h);
    g.is_final_.push_back(h == 0 ? 0 : 1);
    if (h != 0) g.finals_.push_back(h);
  }
  g.start_ = 0;

  std::vector<std::vector<GraphArc>> out(num_hist);
  const double w_self = std::log(transitions.self_loop);
  const double w_fwd = std::log(transitions.forward);
  struct PronStart { int state; int word; };
  std::vector<PronStart> pron_starts;

  int w = 0;
  for (const auto& [word, prons] : lex.entries) {
    const int exit_state =
        history_index.at(utf8::split_code_points(word).back());
    for (const PhoneSeq& pron : prons) {
      if (pron.empty()) throw Error("empty pronunciation for word " + word);
      std::vector<int> pdfs;
      for (const Phone& p : pron) {
        int base = pdf_base.at(p.label());
        for (int k = 0; k < 3; ++k) pdfs.push_back(base + k);
      }
      const int first = static_cast<int>(g.state_pdf_.size());
      pron_starts.push_back({first, w});
      for (std::size_t k = 0; k < pdfs.size(); ++k) {
        const int s = first + static_cast<int>(k);
        g.state_pdf_.push_back(pdfs[k]);
        g.state_history_.push_back(-1);
        g.is_final_.push_back(0);
        out.emplace_back();
        const int next = k + 1 < pdfs.size() ? s + 1 : exit_state;
        out[s].push_back({s, pdfs[k], kNoWord, w_self, 0.0});
        out[s].push_back({next, pdfs[k], kNoWord, w_fwd, 0.0});
      }
    }
    ++w;
  }
  for (int h = 0; h < num_hist; ++h) {
    for (const PronStart& ps : pron_starts) {
      out[h].push_back({ps.state, kNoPdf, ps.word, 0.0,
                        g.entry_lm(h, ps.word)});
    }
  }

  g.arc_start_.push_back(0);
  for (auto& arcs : out) {
    g.arcs_.insert(g.arcs_.end(), arcs.begin(), arcs.end());
    g.arc_start_.push_back(g.arcs_.size());
  }
  return g;
}

// Text layout:
//   GRAPH v1
//   counts <states> <arcs> <pdfs> <words> <histories>
//   pdf <label>            (in id order)
//   word <word>            (in id order)
//   history <char>         (in id order)
//   state <pdf|-> <history|-> <final>
//   arc <from> <to> <pdf|-> <word|-> <weight> <lm>
//   warning <text>
std::string SearchGraph::to_text() const {
  std::string s = "GRAPH v1\n";
  s += "counts " + std::to_string(num_states()) + " " +
       std::to_string(arcs_.size()) + " " + std::to_string(pdf_labels_.size()) +
       " " + std::to_string(words_.size()) + " " +
       std::to_string(history_chars_.size()) + "\n";
  s += "start " + std::to_string(start_) + "\n";
  for (const auto& l : pdf_labels_) s += "pdf " + l + "\n";
  for (const auto& w : words_) s += "word " + w + "\n";
  for (const auto& h : history_chars_) s += "history " + h + "\n";
  for (int i = 0; i < num_states(); ++i) {
    s += "state ";
    s += state_pdf_[i] == kNoPdf ? "-" : std::to_string(state_pdf_[i]);
    s += " ";
    s += state_history_[i] < 0 ? "-" : std::to_string(state_history_[i]);
    s += is_final_[i] ? " 1\n" : " 0\n";
  }
  for (int i = 0; i < num_states(); ++i) {
    for (const GraphArc* a = arcs_begin(i); a != arcs_end(i); ++a) {
      s += "arc " + std::to_string(i) + " " + std::to_string(a->to) + " ";
      s += a->pdf == kNoPdf ? "-" : std::to_string(a->pdf);
      s += " ";
      s += a->word == kNoWord ? "-" : std::to_string(a->word);
      s += " " + fmt_double(a->weight) + " " + fmt_double(a->lm) + "\n";
    }
  }
  for (const auto& w : warnings_) s += "warning " + w + "\n";
  return s;
}

SearchGraph SearchGraph::from_text(std::string_view text) {
  SearchGraph g;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  auto opt_int = [&](const std::string& tok) {
    if (tok == "-") return -1;
    try {
      return std::stoi(tok);
    } catch (const std::exception&) {
      throw ParseError("bad integer '" + tok + "'", lineno);
    }
  };
  if (!std::getline(in, line) || (++lineno, line != "GRAPH v1")) {
    throw ParseError("missing GRAPH v1 header", 1);
  }
  long n_states = -1, n_arcs = -1, n_pdfs = -1, n_words = -1, n_hist = -1;
  struct RawArc { int from; GraphArc arc; };
  std::vector<RawArc> raw;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    if (kind == "counts") {
      if (!(ls >> n_states >> n_arcs >> n_pdfs >> n_words >> n_hist)) {
        throw ParseError("bad counts line", lineno);
      }
    } else if (kind == "start") {
      if (!(ls >> g.start_)) throw ParseError("bad start line", lineno);
    } else if (kind == "pdf" || kind == "word" || kind == "history") {
      std::string v;
      if (!(ls >> v)) throw ParseError("missing value", lineno);
      (kind == "pdf" ? g.pdf_labels_ : kind == "word" ? g.words_ : g.history_chars_)
          .push_back(v);
    } else if (kind == "state") {
      std::string p, h;
      int f = 0;
      if (!(ls >> p >> h >> f)) throw ParseError("bad state line", lineno);
      g.state_pdf_.push_back(opt_int(p));
      g.state_history_.push_back(opt_int(h));
      g.is_final_.push_back(f ? 1 : 0);
      if (f) g.finals_.push_back(static_cast<int>(g.state_pdf_.size()) - 1);
    } else if (kind == "arc") {
      int from = 0;
      std::string to, p, w, wt, lmv;
      if (!(ls >> from >> to >> p >> w >> wt >> lmv)) {
        throw ParseError("bad arc line", lineno);
      }
      GraphArc a;
      a.to = opt_int(to);
      a.pdf = opt_int(p);
      a.word = opt_int(w);
      try {
        a.weight = std::stod(wt);
        a.lm = std::stod(lmv);
      } catch (const std::exception&) {
        throw ParseError("bad arc weight", lineno);
      }
      raw.push_back({from, a});
    } else if (kind == "warning") {
      std::string rest;
      std::getline(ls >> std::ws, rest);
      g.warnings_.push_back(rest);
    } else {
      throw ParseError("unknown record '" + kind + "'", lineno);
    }
  }
  if (n_states < 0) throw ParseError("missing counts line");
  if (n_states != g.num_states() || n_arcs != static_cast<long>(raw.size()) ||
      n_pdfs != g.num_pdfs() || n_words != static_cast<long>(g.words_.size()) ||
      n_hist != static_cast<long>(g.history_chars_.size())) {
    throw ParseError("graph counts do not match contents");
  }
  const int S = g.num_states();
  std::vector<std::vector<GraphArc>> out(S);
  for (const auto& r : raw) {
    if (r.from < 0 || r.from >= S || r.arc.to < 0 || r.arc.to >= S ||
        r.arc.pdf >= g.num_pdfs() || r.arc.word >= static_cast<int>(g.words_.size())) {
      throw ParseError("arc references out of range");
    }
    out[r.from].push_back(r.arc);
  }
  g.arc_start_.push_back(0);
  for (auto& arcs : out) {
    g.arcs_.insert(g.arcs_.end(), arcs.begin(), arcs.end());
    g.arc_start_.push_back(g.arcs_.size());
  }
  g.entry_lm_.assign(g.history_chars_.size() * g.words_.size(), 0.0);
  for (int s = 0; s < S; ++s) {
    const int h = g.state_history_[s];
    if (h < 0) continue;
    for (const GraphArc* a = g.arcs_begin(s); a != g.arcs_end(s); ++a) {
      if (a->word != kNoWord) {
        g.entry_lm_[static_cast<std::size_t>(h) * g.words_.size() + a->word] = a->lm;
      }
    }
  }
  return g;
}

// ---- MatrixScorer ----

MatrixScorer::MatrixScorer(int frames, int labels, std::vector<float> data)
    : frames_(frames), labels_(labels), data_(std::move(data)) {
  if (frames < 0 || labels < 0 ||
      data_.size() != static_cast<std::size_t>(frames) * labels) {
    throw Error("score matrix size does not match frames x labels");
  }
}

double MatrixScorer::audio_seconds() const {
  return audio_seconds_ >= 0.0 ? audio_seconds_ : frames_ * kFrameShiftSeconds;
}

namespace {

void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(std::string_view s, std::size_t off) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[off + i])) << (8 * i);
  }
  return v;
}

}  // namespace

std::string MatrixScorer::to_bytes() const {
  std::string s = "FSCR";
  put_u32(s, static_cast<std::uint32_t>(frames_));
  put_u32(s, static_cast<std::uint32_t>(labels_));
  s.reserve(s.size() + data_.size() * 4);
  for (float f : data_) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(s, bits);
  }
  return s;
}

MatrixScorer MatrixScorer::from_bytes(std::string_view bytes) {
  if (bytes.size() < 12 || bytes.substr(0, 4) != "FSCR") {
    throw Error("not an FSCR score matrix");
  }
  const std::uint32_t frames = get_u32(bytes, 4);
  const std::uint32_t labels = get_u32(bytes, 8);
  const std::size_t n = static_cast<std::size_t>(frames) * labels;
  if (bytes.size() != 12 + 4 * n) throw Error("FSCR payload size mismatch");
  std::vector<float> data(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t bits = get_u32(bytes, 12 + 4 * i);
    std::memcpy(&data[i], &bits, 4);
    if (!std::isfinite(data[i])) throw Error("FSCR contains a non-finite score");
  }
  return MatrixScorer(static_cast<int>(frames), static_cast<int>(labels),
                      std::move(data));
}

void MatrixScorer::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  const std::string b = to_bytes();
  out.write(b.data(), static_cast<std::streamsize>(b.size()));
}

MatrixScorer MatrixScorer::read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::string b((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_bytes(b);
}

std::string DecodeStats::to_json() const {
  nlohmann::ordered_json j;
  j["frames"] = frames;
  j["tokens_expanded"] = tokens_expanded;
  j["active_tokens_mean"] = active_tokens_mean;
  j["wall_seconds"] = wall_seconds;
  j["audio_seconds"] = audio_seconds;
  j["rtf"] = rtf;
  j["beam"] = std::isinf(beam) ? nlohmann::ordered_json("inf") : nlohmann::ordered_json(beam);
  j["max_active"] = max_active;
  return j.dump();
}

// ---- decoding ----

namespace {

// A word entered at `frame` from link `pred`.
struct EntryRec {
  int frame;
  int pred;
  int word;
  double lm;
  double entry_score;
};

// A surviving history token: the end of a word at `frame`.
struct Link {
  int state;
  int frame;
  int entry;  // -1 for the start link
  double score;
};

struct TraceRec {
  int state;
  int prev;
};

struct Candidate {
  double score;
  int ref;  // history state: link id; emitting state: entry id
  int consumed;    // emitting state whose pdf scored this frame
  int prev_trace;
};

class Frontier {
 public:
  explicit Frontier(int n) : tok_(n), stamp_(n, -1) {}
  void reset() { ++gen_; active_.clear(); }
  bool has(int s) const { return stamp_[s] == gen_; }
  Candidate& at(int s) { return tok_[s]; }
  // Returns true when `c` was stored.
  bool relax(int s, const Candidate& c) {
    if (stamp_[s] != gen_) {
      stamp_[s] = gen_;
      tok_[s] = c;
      active_.push_back(s);
      return true;
    }
    if (c.score > tok_[s].score) {
      tok_[s] = c;
      return true;
    }
    return false;
  }
  std::vector<int>& active() { return active_; }

 private:
  std::vector<Candidate> tok_;
  std::vector<int> stamp_;
  std::vector<int> active_;
  int gen_ = 0;
};

bool better(double sa, int a, double sb, int b) {
  return sa > sb || (sa == sb && a < b);
}

}  // namespace

DecodeResult decode(const SearchGraph& graph, const AcousticScorer& scorer,
                    const DecodeParams& params) {
  const int T = scorer.num_frames();
  if (T < 1) throw Error("decode needs at least one frame");
  if (scorer.num_labels() < graph.num_pdfs()) {
    throw Error("scorer has " + std::to_string(scorer.num_labels()) +
                " labels, graph needs " + std::to_string(graph.num_pdfs()));
  }
  if (!(params.beam > 0.0)) throw Error("beam must be positive");
  if (params.max_active < 1) throw Error("max_active must be positive");
  if (!(params.lm_weight > 0.0)) throw Error("lm_weight must be positive");

  const auto t0 = std::chrono::steady_clock::now();
  const int S = graph.num_states();
  const bool trace_on = params.keep_state_trace;

  std::vector<EntryRec> entries;
  std::vector<Link> links;
  std::vector<TraceRec> traces;
  std::vector<std::vector<int>> topk(static_cast<std::size_t>(T) + 1);
  std::uint64_t expanded = 0;
  std::uint64_t active_sum = 0;

  Frontier cur(S), next(S);
  cur.reset();
  links.push_back({graph.start(), 0, -1, 0.0});
  cur.relax(graph.start(), {0.0, 0, -1, -1});
  topk[0].push_back(0);

  // Pending entry data per emitting target during closure.
  struct Pending { int link; int word; double lm; };
  std::vector<Pending> pending(S);

  for (int t = 0; t < T; ++t) {
    // Epsilon closure: history tokens enter words.
    std::vector<int> hist;
    for (int s : cur.active()) {
      if (!graph.is_emitting(s)) hist.push_back(s);
    }
    std::sort(hist.begin(), hist.end());
    std::vector<int> entered;
    for (int h : hist) {
      const Candidate ht = cur.at(h);
      for (const GraphArc* a = graph.arcs_begin(h); a != graph.arcs_end(h); ++a) {
        ++expanded;
        const double sc = ht.score + a->weight + params.lm_weight * a->lm;
        if (cur.relax(a->to, {sc, -1, -1, ht.prev_trace})) {
          entered.push_back(a->to);
          pending[a->to] = {ht.ref, a->word, a->lm};
        }
      }
    }
    for (int s : entered) {
      Candidate& c = cur.at(s);
      if (c.ref == -1) {
        const Pending& p = pending[s];
        c.ref = static_cast<int>(entries.size());
        entries.push_back({t, p.link, p.word, p.lm, c.score});
      }
    }

    // Emitting step.
    next.reset();
    std::vector<int> emitting;
    for (int s : cur.active()) {
      if (graph.is_emitting(s)) emitting.push_back(s);
    }
    std::sort(emitting.begin(), emitting.end());
    for (int s : emitting) {
      const Candidate& c = cur.at(s);
      const double ac = scorer.score(t, graph.pdf(s));
      for (const GraphArc* a = graph.arcs_begin(s); a != graph.arcs_end(s); ++a) {
        ++expanded;
        next.relax(a->to, {c.score + a->weight + ac, c.ref, s, c.prev_trace});
      }
    }

    // Pruning.
    std::vector<int>& act = next.active();
    if (act.empty()) {
      throw DecodeError("no surviving tokens at frame " + std::to_string(t));
    }
    double best = -std::numeric_limits<double>::infinity();
    for (int s : act) best = std::max(best, next.at(s).score);
    const double cutoff = best - params.beam;
    std::vector<int> kept;
    for (int s : act) {
      if (next.at(s).score >= cutoff) kept.push_back(s);
    }
    auto order = [&](int a, int b) {
      return better(next.at(a).score, a, next.at(b).score, b);
    };
    if (kept.size() > static_cast<std::size_t>(params.max_active)) {
      std::nth_element(kept.begin(), kept.begin() + params.max_active, kept.end(), order);
      kept.resize(params.max_active);
    }
    std::sort(kept.begin(), kept.end());
    active_sum += kept.size();

    // Rebuild the frontier with survivors only; word ends become links.
    std::vector<std::pair<int, Candidate>> survivors;
    survivors.reserve(kept.size());
    for (int s : kept) survivors.emplace_back(s, next.at(s));
    next.reset();
    std::vector<int> ends;
    for (auto& [s, c] : survivors) {
      if (trace_on) {
        traces.push_back({c.consumed, c.prev_trace});
        c.prev_trace = static_cast<int>(traces.size()) - 1;
      }
      Candidate stored{c.score, c.ref, -1, trace_on ? c.prev_trace : -1};
      if (!graph.is_emitting(s)) {
        links.push_back({s, t + 1, c.ref, c.score});
        stored.ref = static_cast<int>(links.size()) - 1;
        ends.push_back(s);
      }
      next.relax(s, stored);
    }
    std::sort(ends.begin(), ends.end(), [&](int a, int b) {
      return better(next.at(a).score, a, next.at(b).score, b);
    });
    if (ends.size() > static_cast<std::size_t>(params.lattice_top_k)) {
      ends.resize(std::max(params.lattice_top_k, 0));
    }
    for (int s : ends) topk[t + 1].push_back(next.at(s).ref);
    std::swap(cur, next);
  }

  // Best final token.
  int best_state = -1;
  for (int s : cur.active()) {
    if (!graph.is_final(s)) continue;
    if (best_state < 0 || better(cur.at(s).score, s, cur.at(best_state).score, best_state)) {
      best_state = s;
    }
  }
  if (best_state < 0) {
    throw DecodeError("no token reached a final state after " + std::to_string(T) +
                      " frames (beam too tight?)");
  }

  DecodeResult res;
  res.score = cur.at(best_state).score;
  Hypothesis& hyp = res.hypothesis;
  hyp.lm_weight = params.lm_weight;
  for (int l = cur.at(best_state).ref; links[l].entry >= 0;) {
    const EntryRec& e = entries[links[l].entry];
    hyp.words.push_back(graph.words()[e.word]);
    hyp.am_total += links[l].score - e.entry_score;
    hyp.lm_total += e.lm;
    l = e.pred;
  }
  std::reverse(hyp.words.begin(), hyp.words.end());

  if (trace_on) {
    for (int i = cur.at(best_state).prev_trace; i >= 0; i = traces[i].prev) {
      res.state_trace.push_back(traces[i].state);
    }
    std::reverse(res.state_trace.begin(), res.state_trace.end());
  }

  if (params.build_lattice) {
    // Walk back from every final link through winner and top-K predecessors.
    std::vector<int> final_links;
    for (int s : cur.active()) {
      if (graph.is_final(s)) final_links.push_back(cur.at(s).ref);
    }
    std::set<int> seen(final_links.begin(), final_links.end());
    std::vector<int> stack(final_links.begin(), final_links.end());
    struct RawArc { int from, to, word; double am, lm; };
    std::vector<RawArc> raw;
    while (!stack.empty()) {
      const int l = stack.back();
      stack.pop_back();
      if (links[l].entry < 0) continue;
      const EntryRec& e = entries[links[l].entry];
      const double am = links[l].score - e.entry_score;
      std::vector<int> preds{e.pred};
      for (int p : topk[e.frame]) {
        if (p != e.pred) preds.push_back(p);
      }
      for (int p : preds) {
        const double lm =
            p == e.pred ? e.lm : graph.entry_lm(graph.history_of(links[p].state), e.word);
        raw.push_back({p, l, e.word, am, lm});
        if (seen.insert(p).second) stack.push_back(p);
      }
    }
    seen.insert(0);
    std::vector<int> ordered(seen.begin(), seen.end());
    std::sort(ordered.begin(), ordered.end(), [&](int a, int b) {
      if (links[a].frame != links[b].frame) return links[a].frame < links[b].frame;
      return links[a].state < links[b].state;
    });
    std::map<int, int> node_of;
    for (int l : ordered) node_of[l] = res.lattice.add_node(links[l].frame);
    res.lattice.set_start(node_of.at(0));
    std::sort(raw.begin(), raw.end(), [&](const RawArc& a, const RawArc& b) {
      const int fa = node_of.at(a.from), fb = node_of.at(b.from);
      if (fa != fb) return fa < fb;
      const int ta = node_of.at(a.to), tb = node_of.at(b.to);
      if (ta != tb) return ta < tb;
      return a.word < b.word;
    });
    for (const RawArc& a : raw) {
      res.lattice.add_arc({node_of.at(a.from), node_of.at(a.to),
                           graph.words()[a.word], a.am, a.lm});
    }
    std::vector<int> fnodes;
    for (int l : final_links) fnodes.push_back(node_of.at(l));
    std::sort(fnodes.begin(), fnodes.end());
    for (int n : fnodes) res.lattice.add_final(n);
  }

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  DecodeStats& st = res.stats;
  st.frames = T;
  st.tokens_expanded = expanded;
  st.active_tokens_mean = static_cast<double>(active_sum) / T;
  st.wall_seconds = wall;
  st.audio_seconds = scorer.audio_seconds();
  st.rtf = st.audio_seconds > 0 ? wall / st.audio_seconds : 0.0;
  st.beam = params.beam;
  st.max_active = params.max_active;
  return res;
}

BatchResult batch_decode(const SearchGraph& graph,
                         const std::vector<const AcousticScorer*>& utterances,
                         const DecodeParams& params, int workers) {
  if (utterances.empty()) throw Error("batch_decode: empty batch");
  for (const AcousticScorer* u : utterances) {
    if (u == nullptr) throw Error("batch_decode: null utterance");
    if (!(u->audio_seconds() > 0.0)) {
      throw Error("batch_decode: utterance without audio duration");
    }
  }
  BatchResult br;
  br.items.resize(utterances.size());
  std::vector<double> proc(utterances.size(), 0.0), audio(utterances.size());

  auto run_one = [&](std::size_t i) {
    const auto t0 = std::chrono::steady_clock::now();
    BatchItem& item = br.items[i];
    try {
      item.result = decode(graph, *utterances[i], params);
      item.ok = true;
    } catch (const Error& e) {
      item.error = e.what();
    }
    proc[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    audio[i] = utterances[i]->audio_seconds();
  };

  workers = std::max(1, std::min<int>(workers, static_cast<int>(utterances.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < utterances.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i; (i = next.fetch_add(1)) < utterances.size();) run_one(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  for (const auto& it : br.items) br.failures += it.ok ? 0 : 1;
  for (std::size_t i = 0; i < proc.size(); ++i) {
    br.processing_seconds += proc[i];
    br.audio_seconds += audio[i];
  }
  br.rtf = aggregate_rtf(proc, audio);
  return br;
}

double aggregate_rtf(const std::vector<double>& processing_seconds,
                     const std::vector<double>& audio_seconds) {
  if (processing_seconds.empty()) throw Error("aggregate_rtf: empty batch");
  if (processing_seconds.size() != audio_seconds.size()) {
    throw Error("aggregate_rtf: length mismatch");
  }
  double p = 0.0, a = 0.0;
  for (double v : processing_seconds) p += v;
  for (double v : audio_seconds) a += v;
  if (!(a > 0.0)) throw Error("aggregate_rtf: total audio duration is zero");
  return p / a;
}

}  // namespace yueasr
