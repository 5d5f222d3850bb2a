#include "yueasr/ngram_lm.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "yueasr/error.h"
#include "yueasr/utf8.h"

namespace yueasr {

namespace {

double to_log10(double p) { return p > 0.0 ? std::log10(p) : kLog10Zero; }

double from_log10(double lp) { return lp <= kLog10Zero ? 0.0 : std::pow(10.0, lp); }

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::string> markers() { return {kSentenceBegin, kSentenceEnd, kUnknown}; }

// Stored continuations of every context of length n-1.
std::map<NGramModel::Key, std::vector<int>> children(const NGramModel& m, int n) {
  std::map<NGramModel::Key, std::vector<int>> out;
  for (const auto& [key, entry] : m.table(n)) {
    out[NGramModel::Key(key.begin(), key.end() - 1)].push_back(key.back());
  }
  return out;
}

}  // namespace

std::size_t NGramModel::KeyHash::operator()(const Key& k) const noexcept {
  std::size_t h = 1469598103934665603ull;
  for (int v : k) {
    h ^= static_cast<std::size_t>(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  }
  return h;
}

NGramModel::NGramModel(int order, const std::vector<std::string>& tokens)
    : order_(order), tables_(order) {
  if (order < 1) throw Error("n-gram order must be >= 1");
  vocab_ = markers();
  std::set<std::string> rest(tokens.begin(), tokens.end());
  for (const auto& m : markers()) rest.erase(m);
  vocab_.insert(vocab_.end(), rest.begin(), rest.end());
  for (std::size_t i = 0; i < vocab_.size(); ++i) ids_[vocab_[i]] = static_cast<int>(i);
}

bool NGramModel::contains(std::string_view token) const {
  return ids_.count(std::string(token)) > 0;
}

int NGramModel::id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnk : it->second;
}

double NGramModel::logprob(std::span<const int> history, int word) const {
  const std::size_t max_hist = static_cast<std::size_t>(order_ - 1);
  if (history.size() > max_hist) history = history.subspan(history.size() - max_hist);
  double backoff_sum = 0.0;
  Key key;
  key.reserve(history.size() + 1);
  for (std::size_t start = 0; start <= history.size(); ++start) {
    const std::size_t len = history.size() - start;
    key.assign(history.begin() + start, history.end());
    key.push_back(word);
    const auto& tab = tables_[len];
    auto it = tab.find(key);
    if (it != tab.end()) return std::max(kLog10Zero, backoff_sum + it->second.logprob);
    if (len > 0) {
      key.pop_back();
      auto ctx = tables_[len - 1].find(key);
      if (ctx != tables_[len - 1].end()) backoff_sum += ctx->second.backoff;
    }
  }
  return kLog10Zero;
}

double NGramModel::logprob(const std::vector<std::string>& history,
                           const std::string& word) const {
  std::vector<int> h;
  h.reserve(history.size());
  for (const auto& t : history) h.push_back(id(t));
  return logprob(h, id(word));
}

double NGramModel::prob(std::span<const int> history, int word) const {
  return from_log10(logprob(history, word));
}

void NGramModel::normalize_backoffs(int n) {
  if (n < 2 || n > order_) return;
  auto& contexts = tables_[n - 2];
  for (auto& [key, entry] : contexts) entry.backoff = 0.0;
  for (const auto& [ctx, words] : children(*this, n)) {
    auto it = contexts.find(ctx);
    if (it == contexts.end()) continue;  // prefix missing; nothing to attach to
    const std::span<const int> lower(ctx.data() + 1, ctx.size() - 1);
    double seen = 0.0, seen_lower = 0.0;
    Key key = ctx;
    key.push_back(0);
    for (int w : words) {
      key.back() = w;
      seen += from_log10(tables_[n - 1].at(key).logprob);
      seen_lower += prob(lower, w);
    }
    const double num = 1.0 - seen;
    const double den = 1.0 - seen_lower;
    if (num <= 1e-12) {
      it->second.backoff = kLog10Zero;
    } else if (den <= 1e-12) {
      // Lower order has no mass left to redistribute.
      it->second.backoff = kLog10Zero;
    } else {
      it->second.backoff = std::log10(num / den);
    }
  }
}

NGramModel train_ngram(const std::vector<Sentence>& corpus, int order,
                       Smoothing smoothing) {
  if (corpus.empty()) throw Error("cannot train a language model on an empty corpus");
  if (order < 1) throw Error("n-gram order must be >= 1");

  std::vector<std::string> tokens;
  for (const auto& s : corpus) tokens.insert(tokens.end(), s.begin(), s.end());
  NGramModel m(order, tokens);

  std::vector<std::map<NGramModel::Key, double>> counts(order);
  for (const auto& s : corpus) {
    std::vector<int> padded{NGramModel::kBos};
    for (const auto& t : s) padded.push_back(m.id(t));
    padded.push_back(NGramModel::kEos);
    for (std::size_t i = 1; i < padded.size(); ++i) {
      for (int n = 1; n <= order && static_cast<std::size_t>(n) <= i + 1; ++n) {
        counts[n - 1][NGramModel::Key(padded.begin() + (i + 1 - n),
                                      padded.begin() + i + 1)] += 1.0;
      }
    }
  }

  // Unigrams over every vocabulary entry except <s>.
  double total = 0.0;
  for (const auto& [k, c] : counts[0]) total += c;
  const double types = static_cast<double>(counts[0].size());
  const double vocab_wo_bos = static_cast<double>(m.vocab_size() - 1);
  auto& uni = m.mutable_table(1);
  uni[{NGramModel::kBos}] = {kLog10Zero, 0.0};
  for (int w = 1; w < static_cast<int>(m.vocab_size()); ++w) {
    auto it = counts[0].find({w});
    const double c = it == counts[0].end() ? 0.0 : it->second;
    double p = 0.0;
    if (smoothing == Smoothing::kNone) {
      p = c / total;
    } else {
      p = (c + types / vocab_wo_bos) / (total + types);
    }
    uni[{w}] = {to_log10(p), 0.0};
  }

  for (int n = 2; n <= order; ++n) {
    std::map<NGramModel::Key, std::pair<double, double>> ctx_stats;  // count, types
    for (const auto& [k, c] : counts[n - 1]) {
      auto& st = ctx_stats[NGramModel::Key(k.begin(), k.end() - 1)];
      st.first += c;
      st.second += 1.0;
    }
    auto& tab = m.mutable_table(n);
    for (const auto& [k, c] : counts[n - 1]) {
      const NGramModel::Key ctx(k.begin(), k.end() - 1);
      const auto& [ctx_count, ctx_types] = ctx_stats.at(ctx);
      double p = 0.0;
      if (smoothing == Smoothing::kNone) {
        p = c / ctx_count;
      } else {
        const std::span<const int> lower(ctx.data() + 1, ctx.size() - 1);
        p = (c + ctx_types * m.prob(lower, k.back())) / (ctx_count + ctx_types);
      }
      tab[k] = {to_log10(p), 0.0};
    }
    m.normalize_backoffs(n);
  }
  return m;
}

NGramModel interpolate(const NGramModel& a, const NGramModel& b, double lambda) {
  if (a.order() != b.order())
    throw Error("cannot interpolate models of order " + std::to_string(a.order()) +
                " and " + std::to_string(b.order()));
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw Error("interpolation weight must be in [0, 1]");

  std::vector<std::string> tokens = a.vocab();
  tokens.insert(tokens.end(), b.vocab().begin(), b.vocab().end());
  NGramModel m(a.order(), tokens);

  // A component gives zero probability to words outside its vocabulary so
  // that each component stays normalized over the union vocabulary.
  auto component = [&](const NGramModel& c, const NGramModel::Key& key) {
    if (!c.contains(m.token(key.back()))) return 0.0;
    std::vector<int> hist;
    for (std::size_t i = 0; i + 1 < key.size(); ++i) hist.push_back(c.id(m.token(key[i])));
    return c.prob(hist, c.id(m.token(key.back())));
  };

  for (int n = 1; n <= m.order(); ++n) {
    std::set<NGramModel::Key> support;
    for (const NGramModel* c : {&a, &b}) {
      for (const auto& [key, entry] : c->table(n)) {
        NGramModel::Key mapped;
        for (int id : key) mapped.push_back(m.id(c->token(id)));
        support.insert(mapped);
        // Every continuation of a seen context is listed, so the mixture is
        // exact there; unseen contexts back off with weight 1 in both models.
        if (n > 1) {
          for (int w = 0; w < static_cast<int>(m.vocab_size()); ++w) {
            if (w == NGramModel::kBos) continue;
            mapped.back() = w;
            support.insert(mapped);
          }
        }
      }
    }
    auto& tab = m.mutable_table(n);
    for (const auto& key : support) {
      const double p = lambda * component(a, key) + (1.0 - lambda) * component(b, key);
      tab[key] = {to_log10(p), 0.0};
    }
    if (n == 1) tab[{NGramModel::kBos}] = {kLog10Zero, 0.0};
    m.normalize_backoffs(n);
  }
  return m;
}

LogProbTotal score_text(const NGramModel& m, const std::vector<Sentence>& text,
                        double unk_floor) {
  LogProbTotal total;
  const double floor_lp = unk_floor > 0.0 ? std::log10(unk_floor) : kLog10Zero;
  std::vector<int> hist;
  for (const auto& s : text) {
    hist.assign(1, NGramModel::kBos);
    for (std::size_t i = 0; i <= s.size(); ++i) {
      const int w = i < s.size() ? m.id(s[i]) : NGramModel::kEos;
      double lp = m.logprob(hist, w);
      if (w == NGramModel::kUnk) {
        ++total.oovs;
        lp = std::max(lp, floor_lp);
      }
      total.log10_sum += lp;
      ++total.tokens;
      hist.push_back(w);
    }
  }
  return total;
}

double perplexity(const NGramModel& m, const std::vector<Sentence>& text,
                  double unk_floor) {
  if (text.empty()) throw Error("perplexity needs non-empty text");
  const auto t = score_text(m, text, unk_floor);
  return std::pow(10.0, -t.log10_sum / static_cast<double>(t.tokens));
}

double tune_lambda(const NGramModel& a, const NGramModel& b,
                   const std::vector<Sentence>& heldout, double unk_floor) {
  if (heldout.empty()) throw Error("tune_lambda needs held-out text");
  std::vector<std::pair<double, double>> probs;
  auto token_prob = [&](const NGramModel& m, const std::vector<int>& hist, int w) {
    double p = m.prob(hist, w);
    if (w == NGramModel::kUnk) p = std::max(p, unk_floor);
    return p;
  };
  for (const auto& s : heldout) {
    std::vector<int> ha{NGramModel::kBos}, hb{NGramModel::kBos};
    for (std::size_t i = 0; i <= s.size(); ++i) {
      const int wa = i < s.size() ? a.id(s[i]) : NGramModel::kEos;
      const int wb = i < s.size() ? b.id(s[i]) : NGramModel::kEos;
      probs.emplace_back(token_prob(a, ha, wa), token_prob(b, hb, wb));
      ha.push_back(wa);
      hb.push_back(wb);
    }
  }

  double lambda = 0.5;
  for (int iter = 0; iter < 100; ++iter) {
    double posterior_sum = 0.0;
    std::size_t used = 0;
    for (const auto& [pa, pb] : probs) {
      const double mix = lambda * pa + (1.0 - lambda) * pb;
      if (mix <= 0.0) continue;
      posterior_sum += lambda * pa / mix;
      ++used;
    }
    if (used == 0) break;
    const double next = posterior_sum / static_cast<double>(used);
    const bool done = std::abs(next - lambda) < 1e-6;
    lambda = next;
    if (done) break;
  }
  return lambda;
}

std::string to_arpa(const NGramModel& m) {
  std::string out = "\\data\\\n";
  for (int n = 1; n <= m.order(); ++n)
    out += "ngram " + std::to_string(n) + "=" + std::to_string(m.num_ngrams(n)) + "\n";
  char buf[64];
  for (int n = 1; n <= m.order(); ++n) {
    out += "\n\\" + std::to_string(n) + "-grams:\n";
    std::vector<std::pair<std::vector<std::string>, NGramModel::Entry>> rows;
    for (const auto& [key, entry] : m.table(n)) {
      std::vector<std::string> words;
      for (int id : key) words.push_back(m.token(id));
      rows.emplace_back(std::move(words), entry);
    }
    std::sort(rows.begin(), rows.end(),
              [](const auto& x, const auto& y) { return x.first < y.first; });
    for (const auto& [words, entry] : rows) {
      std::snprintf(buf, sizeof buf, "%.6f", std::max(entry.logprob, kLog10Zero));
      out += buf;
      out += '\t';
      for (std::size_t i = 0; i < words.size(); ++i) {
        if (i) out += ' ';
        out += words[i];
      }
      if (n < m.order() && entry.backoff != 0.0) {
        std::snprintf(buf, sizeof buf, "\t%.6f", std::max(entry.backoff, kLog10Zero));
        out += buf;
      }
      out += '\n';
    }
  }
  out += "\n\\end\\\n";
  return out;
}

void write_arpa(const NGramModel& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << to_arpa(m);
  if (!out) throw Error("write failed for " + path.string());
}

NGramModel parse_arpa(std::string_view text) {
  std::istringstream is{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> bool {
    if (!std::getline(is, line)) return false;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };

  bool seen_data = false;
  while (next_line()) {
    if (line == "\\data\\") { seen_data = true; break; }
    if (!line.empty()) throw ParseError("expected \\data\\ header", line_no);
  }
  if (!seen_data) throw ParseError("missing \\data\\ header", line_no);

  std::vector<std::size_t> declared;
  while (next_line()) {
    if (line.empty()) {
      if (declared.empty()) continue;
      break;
    }
    if (line.rfind("ngram ", 0) != 0) throw ParseError("expected 'ngram N=count'", line_no);
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'ngram N=count'", line_no);
    int n = 0;
    long long count = -1;
    try {
      n = std::stoi(line.substr(6, eq - 6));
      count = std::stoll(line.substr(eq + 1));
    } catch (const std::exception&) {
      throw ParseError("bad ngram count line", line_no);
    }
    if (n != static_cast<int>(declared.size()) + 1 || count < 0)
      throw ParseError("ngram orders must be declared as 1, 2, ...", line_no);
    declared.push_back(static_cast<std::size_t>(count));
  }
  if (declared.empty()) throw ParseError("no ngram counts declared", line_no);
  const int order = static_cast<int>(declared.size());

  struct Row {
    std::vector<std::string> words;
    double logprob, backoff;
  };
  std::vector<std::vector<Row>> rows(order);
  std::set<std::string> tokens;
  int current = 0;
  bool ended = false;
  while (next_line()) {
    if (line.empty()) continue;
    if (line == "\\end\\") { ended = true; break; }
    if (line[0] == '\\') {
      int n = 0;
      if (std::sscanf(line.c_str(), "\\%d-grams:", &n) != 1 ||
          line != "\\" + std::to_string(n) + "-grams:")
        throw ParseError("unexpected section header '" + line + "'", line_no);
      if (n < 1 || n > order)
        throw ParseError("section \\" + std::to_string(n) +
                             "-grams: exceeds declared order " + std::to_string(order),
                         line_no);
      if (n != current + 1) throw ParseError("n-gram sections out of order", line_no);
      current = n;
      continue;
    }
    if (current == 0) throw ParseError("n-gram entry outside a section", line_no);
    std::istringstream fields(line);
    Row row{{}, 0.0, 0.0};
    std::string tok;
    if (!(fields >> tok)) throw ParseError("empty n-gram entry", line_no);
    try {
      row.logprob = std::stod(tok);
    } catch (const std::exception&) {
      throw ParseError("bad log probability '" + tok + "'", line_no);
    }
    std::vector<std::string> rest;
    while (fields >> tok) rest.push_back(tok);
    if (rest.size() == static_cast<std::size_t>(current) + 1) {
      try {
        row.backoff = std::stod(rest.back());
      } catch (const std::exception&) {
        throw ParseError("bad back-off weight '" + rest.back() + "'", line_no);
      }
      rest.pop_back();
    }
    if (rest.size() != static_cast<std::size_t>(current))
      throw ParseError("expected " + std::to_string(current) + " words", line_no);
    tokens.insert(rest.begin(), rest.end());
    row.words = std::move(rest);
    rows[current - 1].push_back(std::move(row));
  }
  if (!ended) throw ParseError("missing \\end\\ marker", line_no);
  for (int n = 1; n <= order; ++n) {
    if (rows[n - 1].size() != declared[n - 1])
      throw ParseError("section " + std::to_string(n) + "-grams has " +
                           std::to_string(rows[n - 1].size()) + " entries, header says " +
                           std::to_string(declared[n - 1]),
                       line_no);
  }

  NGramModel m(order, std::vector<std::string>(tokens.begin(), tokens.end()));
  for (int n = 1; n <= order; ++n) {
    auto& tab = m.mutable_table(n);
    for (const auto& row : rows[n - 1]) {
      NGramModel::Key key;
      for (const auto& w : row.words) key.push_back(m.id(w));
      tab[key] = {row.logprob, row.backoff};
    }
  }
  return m;
}

NGramModel read_arpa(const std::filesystem::path& path) { return parse_arpa(slurp(path)); }

std::vector<Sentence> parse_corpus(std::string_view text) {
  std::vector<Sentence> out;
  std::istringstream is{std::string(text)};
  std::string line;
  while (std::getline(is, line)) {
    auto toks = utf8::char_tokens(line);
    if (!toks.empty()) out.push_back(std::move(toks));
  }
  return out;
}

std::vector<Sentence> read_corpus(const std::filesystem::path& path) {
  return parse_corpus(slurp(path));
}

}  // namespace yueasr
