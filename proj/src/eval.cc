#include "yueasr/eval.h"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "yueasr/error.h"
#include "yueasr/utf8.h"

namespace yueasr {

namespace {

using json = nlohmann::ordered_json;

char32_t decode_cp(const std::string& s) {
  const auto b0 = static_cast<unsigned char>(s[0]);
  if (b0 < 0x80) return b0;
  int n = b0 >= 0xf0 ? 3 : b0 >= 0xe0 ? 2 : 1;
  char32_t cp = b0 & (0x3f >> n);
  for (int i = 1; i <= n; ++i) cp = (cp << 6) | (static_cast<unsigned char>(s[i]) & 0x3f);
  return cp;
}

bool is_punct(char32_t c) {
  if (c < 0x80) return std::ispunct(static_cast<int>(c)) != 0;
  return (c >= 0x2010 && c <= 0x2027) || (c >= 0x2030 && c <= 0x205e) ||
         (c >= 0x3001 && c <= 0x303f) || (c >= 0xff01 && c <= 0xff0f) ||
         (c >= 0xff1a && c <= 0xff20) || (c >= 0xff3b && c <= 0xff40) ||
         (c >= 0xff5b && c <= 0xff65);
}

bool is_space(const std::string& cp) {
  return cp == " " || cp == "\t" || cp == "\n" || cp == "\r" || cp == "\v" ||
         cp == "\f" || cp == "\xe3\x80\x80";
}

std::vector<std::string> units(std::string_view text, bool strip_punctuation) {
  return utf8::split_code_points(normalize_text(text, strip_punctuation));
}

json wer_json(const WerResult& w) {
  json j;
  j["S"] = w.substitutions;
  j["I"] = w.insertions;
  j["D"] = w.deletions;
  j["N"] = w.ref_length;
  j["rate"] = w.rate();
  return j;
}

}  // namespace

std::string normalize_text(std::string_view text, bool strip_punctuation) {
  std::string out;
  for (const std::string& cp : utf8::split_code_points(text)) {
    if (is_space(cp)) continue;
    if (strip_punctuation && is_punct(decode_cp(cp))) continue;
    out += cp;
  }
  return out;
}

WerResult wer(const std::vector<std::string>& ref, const std::vector<std::string>& hyp) {
  if (ref.empty()) throw Error("wer: empty reference");
  const std::size_t n = ref.size(), m = hyp.size();
  // Cost is (edits, insertions + deletions), compared lexicographically.
  struct Cell {
    std::size_t edits, indels;
    int op;  // 0 match/sub, 1 deletion, 2 insertion
  };
  std::vector<Cell> dp((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> Cell& { return dp[i * (m + 1) + j]; };
  at(0, 0) = {0, 0, 0};
  for (std::size_t i = 1; i <= n; ++i) at(i, 0) = {i, i, 1};
  for (std::size_t j = 1; j <= m; ++j) at(0, j) = {j, j, 2};
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const Cell& d = at(i - 1, j - 1);
      Cell best{d.edits + (ref[i - 1] == hyp[j - 1] ? 0 : 1), d.indels, 0};
      const Cell& u = at(i - 1, j);
      Cell del{u.edits + 1, u.indels + 1, 1};
      const Cell& l = at(i, j - 1);
      Cell ins{l.edits + 1, l.indels + 1, 2};
      auto less = [](const Cell& a, const Cell& b) {
        return a.edits < b.edits || (a.edits == b.edits && a.indels < b.indels);
      };
      if (less(del, best)) best = del;
      if (less(ins, best)) best = ins;
      at(i, j) = best;
    }
  }
  WerResult r;
  r.ref_length = n;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    const int op = at(i, j).op;
    if (op == 0) {
      if (ref[i - 1] != hyp[j - 1]) ++r.substitutions;
      --i;
      --j;
    } else if (op == 1) {
      ++r.deletions;
      --i;
    } else {
      ++r.insertions;
      --j;
    }
  }
  return r;
}

WerResult wer(std::string_view ref, std::string_view hyp, bool strip_punctuation) {
  return wer(units(ref, strip_punctuation), units(hyp, strip_punctuation));
}

WerResult corpus_wer(const std::vector<std::pair<std::string, std::string>>& pairs,
                     bool strip_punctuation) {
  WerResult total;
  for (const auto& [ref, hyp] : pairs) {
    const WerResult w = wer(ref, hyp, strip_punctuation);
    total.substitutions += w.substitutions;
    total.insertions += w.insertions;
    total.deletions += w.deletions;
    total.ref_length += w.ref_length;
  }
  return total;
}

std::string format_percent(double rate) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", rate * 100.0);
  return buf;
}

ErrorClassification classify_errors(const std::vector<std::string>& refs,
                                    const std::vector<std::string>& hyps_a,
                                    const std::vector<std::string>& hyps_b,
                                    bool strip_punctuation) {
  if (refs.size() != hyps_a.size() || refs.size() != hyps_b.size()) {
    throw Error("classify_errors: refs and hypotheses differ in length");
  }
  ErrorClassification c;
  c.total = refs.size();
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const std::string r = normalize_text(refs[i], strip_punctuation);
    const std::string a = normalize_text(hyps_a[i], strip_punctuation);
    const std::string b = normalize_text(hyps_b[i], strip_punctuation);
    const bool ok_a = a == r, ok_b = b == r;
    c.correct_a += ok_a;
    c.correct_b += ok_b;
    if (!ok_a && ok_b) ++c.errors_a_only;
    if (ok_a && !ok_b) ++c.errors_b_only;
    if (!ok_a && !ok_b) {
      ++c.shared_errors;
      if (a == b) {
        ++c.shared_identical;
      } else {
        ++c.shared_different;
      }
    }
  }
  return c;
}

namespace {

std::string pct_of(std::size_t part, std::size_t whole) {
  return whole ? format_percent(static_cast<double>(part) / whole) : std::string("n/a");
}

}  // namespace

std::string classification_report(const ErrorClassification& c, std::string_view name_a,
                                   std::string_view name_b) {
  const std::string a(name_a), b(name_b);
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-28s %10s %10s\n", "", a.c_str(), b.c_str());
  out += buf;
  std::snprintf(buf, sizeof buf, "%-28s %10zu %10zu\n", "correct sentences", c.correct_a,
                c.correct_b);
  out += buf;
  std::snprintf(buf, sizeof buf, "%-28s %10zu %10zu\n", "incorrect sentences",
                c.total - c.correct_a, c.total - c.correct_b);
  out += buf;
  out += "\n";
  auto row = [&](const std::string& label, std::size_t n, const std::string& pct) {
    if (pct.empty()) {
      std::snprintf(buf, sizeof buf, "%-36s %8zu\n", label.c_str(), n);
    } else {
      std::snprintf(buf, sizeof buf, "%-36s %8zu %10s\n", label.c_str(), n, pct.c_str());
    }
    out += buf;
  };
  row("errors in " + a + " only", c.errors_a_only, "");
  row("errors in " + b + " only", c.errors_b_only, "");
  row("shared errors", c.shared_errors, "");
  row("  shared, identical output", c.shared_identical,
      pct_of(c.shared_identical, c.shared_errors));
  row("  shared, different output", c.shared_different,
      pct_of(c.shared_different, c.shared_errors));
  return out;
}

std::string classification_json(const ErrorClassification& c, std::string_view name_a,
                                 std::string_view name_b) {
  json j;
  j["systems"] = {std::string(name_a), std::string(name_b)};
  j["total"] = c.total;
  j["correct_a"] = c.correct_a;
  j["correct_b"] = c.correct_b;
  j["errors_a_only"] = c.errors_a_only;
  j["errors_b_only"] = c.errors_b_only;
  j["shared_errors"] = c.shared_errors;
  j["shared_identical"] = c.shared_identical;
  j["shared_different"] = c.shared_different;
  auto frac = [](std::size_t p, std::size_t w) {
    return w ? json(static_cast<double>(p) / w) : json(nullptr);
  };
  j["shared_identical_fraction"] = frac(c.shared_identical, c.shared_errors);
  j["shared_different_fraction"] = frac(c.shared_different, c.shared_errors);
  return j.dump(2);
}

std::vector<std::string> batch_texts(const BatchResult& batch) {
  std::vector<std::string> out;
  for (const BatchItem& it : batch.items) {
    out.push_back(it.ok ? it.result.hypothesis.text() : std::string());
  }
  return out;
}

std::vector<SweepRow> sweep(const SearchGraph& graph,
                            const std::vector<const AcousticScorer*>& scorers,
                            const SweepGrid& grid, const std::vector<std::string>& refs,
                            DecodeParams base, int workers) {
  if (grid.beams.empty() || grid.max_actives.empty()) throw Error("sweep: empty grid");
  if (refs.size() != scorers.size()) throw Error("sweep: refs and utterances differ in count");
  std::vector<double> beams = grid.beams;
  std::vector<int> actives = grid.max_actives;
  std::sort(beams.begin(), beams.end());
  std::sort(actives.begin(), actives.end());
  std::vector<SweepRow> rows;
  for (double beam : beams) {
    for (int ma : actives) {
      SweepRow row;
      row.beam = beam;
      row.max_active = ma;
      try {
        DecodeParams p = base;
        p.beam = beam;
        p.max_active = ma;
        const BatchResult br = batch_decode(graph, scorers, p, workers);
        const std::vector<std::string> hyps = batch_texts(br);
        std::vector<std::pair<std::string, std::string>> pairs;
        for (std::size_t i = 0; i < refs.size(); ++i) pairs.emplace_back(refs[i], hyps[i]);
        row.wer = corpus_wer(pairs);
        row.rtf = br.rtf;
        row.failures = br.failures;
        row.ok = true;
      } catch (const Error& e) {
        row.error = e.what();
      }
      rows.push_back(row);
    }
  }
  return rows;
}

std::string sweep_json(const std::vector<SweepRow>& rows) {
  json arr = json::array();
  for (const SweepRow& r : rows) {
    json j;
    j["beam"] = std::isinf(r.beam) ? json("inf") : json(r.beam);
    j["max_active"] = r.max_active;
    j["ok"] = r.ok;
    if (r.ok) {
      j["wer"] = wer_json(r.wer);
      j["rtf"] = r.rtf;
      j["failures"] = r.failures;
    } else {
      j["error"] = r.error;
    }
    arr.push_back(j);
  }
  return arr.dump(2);
}

std::string sweep_table(const std::vector<SweepRow>& rows) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%8s %11s %8s %10s %9s\n", "beam", "max_active", "WER",
                "RTF", "failures");
  out += buf;
  for (const SweepRow& r : rows) {
    char beam[32];
    if (std::isinf(r.beam)) {
      std::snprintf(beam, sizeof beam, "inf");
    } else {
      std::snprintf(beam, sizeof beam, "%g", r.beam);
    }
    if (r.ok) {
      std::snprintf(buf, sizeof buf, "%8s %11d %8s %10.5f %9zu\n", beam, r.max_active,
                    format_percent(r.wer.rate()).c_str(), r.rtf, r.failures);
    } else {
      std::snprintf(buf, sizeof buf, "%8s %11d   failed: %s\n", beam, r.max_active,
                    r.error.c_str());
    }
    out += buf;
  }
  return out;
}

std::string eval_report_json(const std::vector<std::string>& refs,
                             const std::vector<std::string>& hyps, double rtf,
                             const DecodeParams& params) {
  if (refs.size() != hyps.size()) throw Error("eval report: refs and hyps differ in count");
  std::vector<std::pair<std::string, std::string>> pairs;
  json per = json::array();
  for (std::size_t i = 0; i < refs.size(); ++i) {
    pairs.emplace_back(refs[i], hyps[i]);
    const WerResult w = wer(refs[i], hyps[i]);
    json u;
    u["index"] = i;
    u["ref"] = refs[i];
    u["hyp"] = hyps[i];
    u["wer"] = wer_json(w);
    per.push_back(u);
  }
  json j;
  j["wer"] = wer_json(corpus_wer(pairs));
  j["rtf"] = rtf;
  json p;
  p["beam"] = std::isinf(params.beam) ? json("inf") : json(params.beam);
  p["max_active"] = params.max_active;
  p["lm_weight"] = params.lm_weight;
  j["params"] = p;
  j["per_utterance"] = per;
  return j.dump(2);
}

}  // namespace yueasr
