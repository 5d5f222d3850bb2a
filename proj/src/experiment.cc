#include "yueasr/experiment.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "yueasr/config.h"
#include "yueasr/error.h"
#include "yueasr/utf8.h"

namespace yueasr {

namespace {

using json = nlohmann::ordered_json;

template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(std::string("stage ") + name + ": " + e.what());
  }
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',' || c == ' ') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

double parse_beam(const std::string& s) {
  if (s == "inf") return DecodeParams::kInfiniteBeam;
  std::size_t used = 0;
  double d = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument(s);
  return d;
}

json wer_json(const WerResult& w) {
  json j;
  j["S"] = w.substitutions;
  j["I"] = w.insertions;
  j["D"] = w.deletions;
  j["N"] = w.ref_length;
  j["rate"] = w.rate();
  j["percent"] = format_percent(w.rate());
  return j;
}

json beam_json(double b) { return std::isinf(b) ? json("inf") : json(b); }

const std::set<std::string> kKnownKeys = {
    "lexicon", "corpus", "inventory", "output_dir", "seed", "utterances",
    "words_per_utterance", "merge_rules", "merge_p", "frames_per_state",
    "feature_dim", "noise_sigma", "model_sigma", "mean_spread", "beam",
    "max_active", "lm_weight", "lattice_top_k", "sweep_beams",
    "sweep_max_actives", "workers"};

}  // namespace

void ExperimentConfig::validate() const {
  if (!has_seed) throw Error("experiment config: seed is required");
  auto need = [](const std::filesystem::path& p, const char* what) {
    if (p.empty()) throw Error(std::string("experiment config: ") + what + " not set");
    if (!std::filesystem::exists(p)) {
      throw Error(std::string("experiment config: ") + what + " not found: " + p.string());
    }
  };
  need(lexicon, "lexicon");
  need(corpus, "corpus");
  if (!inventory.empty()) need(inventory, "inventory");
  if (utterances < 1) throw Error("experiment config: utterances must be >= 1");
  if (min_words < 1 || max_words < min_words) {
    throw Error("experiment config: words_per_utterance must satisfy 1 <= lo <= hi");
  }
  if (!(merge_p >= 0.0 && merge_p <= 1.0)) {
    throw Error("experiment config: merge_p must be in [0,1]");
  }
  if (workers < 1) throw Error("experiment config: workers must be >= 1");
  sim.validate();
}

ExperimentConfig parse_experiment_config(std::string_view text,
                                         const std::filesystem::path& base_dir) {
  const KeyValues kv = parse_key_values(text);
  for (const auto& [k, v] : kv) {
    if (!kKnownKeys.count(k)) throw ParseError("unknown key '" + k + "'", v.line);
  }
  ExperimentConfig c;
  auto path_of = [&](const char* key) -> std::filesystem::path {
    const std::string v = config_string(kv, key, "");
    if (v.empty()) return {};
    std::filesystem::path p(v);
    return p.is_absolute() ? p : base_dir / p;
  };
  c.lexicon = path_of("lexicon");
  c.corpus = path_of("corpus");
  c.inventory = path_of("inventory");
  c.output_dir = path_of("output_dir");
  if (kv.count("seed")) {
    c.seed = static_cast<std::uint64_t>(config_int(kv, "seed", 0));
    c.has_seed = true;
  }
  c.utterances = static_cast<int>(config_int(kv, "utterances", c.utterances));
  if (auto it = kv.find("words_per_utterance"); it != kv.end()) {
    const std::string& v = it->second.value;
    try {
      if (auto dots = v.find(".."); dots != std::string::npos) {
        c.min_words = std::stoi(v.substr(0, dots));
        c.max_words = std::stoi(v.substr(dots + 2));
      } else {
        c.min_words = c.max_words = std::stoi(v);
      }
    } catch (const std::exception&) {
      throw ParseError("words_per_utterance: expected n or lo..hi", it->second.line);
    }
  }
  c.merge_rules = config_string(kv, "merge_rules", c.merge_rules);
  c.merge_p = config_double(kv, "merge_p", c.merge_p);
  c.sim = parse_sim_config(text);
  if (auto it = kv.find("beam"); it != kv.end()) {
    try {
      c.decode.beam = parse_beam(it->second.value);
    } catch (const std::exception&) {
      throw ParseError("beam: expected a number or inf", it->second.line);
    }
  }
  c.decode.max_active = static_cast<int>(config_int(kv, "max_active", c.decode.max_active));
  c.decode.lm_weight = config_double(kv, "lm_weight", c.decode.lm_weight);
  c.decode.lattice_top_k =
      static_cast<int>(config_int(kv, "lattice_top_k", c.decode.lattice_top_k));
  c.decode.build_lattice = false;
  if (auto it = kv.find("sweep_beams"); it != kv.end()) {
    try {
      for (const auto& b : split_list(it->second.value)) c.sweep.beams.push_back(parse_beam(b));
    } catch (const std::exception&) {
      throw ParseError("sweep_beams: expected numbers", it->second.line);
    }
  }
  if (auto it = kv.find("sweep_max_actives"); it != kv.end()) {
    try {
      for (const auto& m : split_list(it->second.value)) c.sweep.max_actives.push_back(std::stoi(m));
    } catch (const std::exception&) {
      throw ParseError("sweep_max_actives: expected integers", it->second.line);
    }
  }
  c.workers = static_cast<int>(config_int(kv, "workers", c.workers));
  return c;
}

ExperimentConfig read_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str(), path.parent_path());
}

std::string Utterance::text() const {
  std::string s;
  for (const auto& w : words) s += w;
  return s;
}

std::vector<Utterance> sample_utterances(const std::vector<LexiconEntry>& lexicon,
                                         const NGramModel& lm, int count, int min_words,
                                         int max_words, std::uint64_t seed) {
  if (lexicon.empty()) throw Error("cannot sample utterances from an empty lexicon");
  std::vector<std::vector<int>> chars;
  for (const LexiconEntry& e : lexicon) {
    std::vector<int> ids;
    for (const std::string& c : utf8::split_code_points(e.word)) ids.push_back(lm.id(c));
    chars.push_back(std::move(ids));
  }
  // Next-word distribution per previous character, built on demand.
  std::map<int, std::discrete_distribution<std::size_t>> next_word;
  auto dist_for = [&](int prev) -> std::discrete_distribution<std::size_t>& {
    auto it = next_word.find(prev);
    if (it != next_word.end()) return it->second;
    std::vector<double> w;
    for (const auto& ids : chars) {
      int h = prev;
      double lp = 0.0;
      for (int c : ids) {
        lp += lm.logprob(std::span<const int>(&h, 1), c);
        h = c;
      }
      w.push_back(std::pow(10.0, lp));
    }
    return next_word.emplace(prev, std::discrete_distribution<std::size_t>(w.begin(), w.end()))
        .first->second;
  };
  std::vector<Utterance> out;
  for (int i = 0; i < count; ++i) {
    std::mt19937_64 rng(utterance_seed(seed, 2 * static_cast<std::uint64_t>(i)));
    std::uniform_int_distribution<int> len(min_words, max_words);
    Utterance u;
    const int n = len(rng);
    int prev = NGramModel::kBos;
    for (int k = 0; k < n; ++k) {
      const std::size_t pick = dist_for(prev)(rng);
      const LexiconEntry& e = lexicon[pick];
      std::uniform_int_distribution<std::size_t> reading(0, e.pronunciations.size() - 1);
      u.words.push_back(e.word);
      u.readings.push_back(e.pronunciations[reading(rng)]);
      prev = chars[pick].back();
    }
    out.push_back(std::move(u));
  }
  return out;
}

void assign_timing(std::vector<Utterance>& utts, const Inventory& inv, const SimConfig& sim,
                   std::uint64_t seed) {
  for (std::size_t i = 0; i < utts.size(); ++i) {
    std::mt19937_64 rng(utterance_seed(~seed, i));
    std::uniform_int_distribution<int> dur(sim.min_frames_per_state, sim.max_frames_per_state);
    auto three = [&] { return std::vector<int>{dur(rng), dur(rng), dur(rng)}; };
    Utterance& u = utts[i];
    u.timing.clear();
    for (const auto& reading : u.readings) {
      std::vector<SyllableTiming> word;
      for (const std::string& syl_text : reading) {
        const Syllable syl = inv.parse(syl_text);
        SyllableTiming t;
        if (!syl.onset.empty()) t.onset = three();
        t.nucleus = three();
        if (!syl.coda.empty()) t.coda = three();
        word.push_back(std::move(t));
      }
      u.timing.push_back(std::move(word));
    }
  }
}

std::vector<Confusion> merge_confusions(const std::vector<LexiconEntry>& lexicon,
                                        const Inventory& inv, const PhoneLexicon& lex,
                                        const MergeRuleSet& rules, double p) {
  std::set<std::string> present;
  for (const Phone& ph : lex.phone_set) present.insert(ph.label());
  std::vector<Confusion> out;
  for (const MergeRule& r : rules.rules()) {
    auto affected = [&](const std::string& nucleus) {
      return (!r.nucleus_filter || r.nucleus_filter->count(nucleus)) &&
             inv.final_of(nucleus, r.from_coda) && inv.final_of(nucleus, r.to_coda);
    };
    if (lex.scheme == Scheme::kIF) {
      for (const std::string& n : inv.nuclei()) {
        if (!affected(n)) continue;
        for (int t = 1; t <= 6; ++t) {
          const std::string to = inv.to_if({"", n, r.to_coda, Tone(t)}).back().label();
          const std::string from = inv.to_if({"", n, r.from_coda, Tone(t)}).back().label();
          if (present.count(to) && present.count(from)) out.push_back({to, from, p});
        }
      }
    } else {
      // Share of from-coda syllables, per tone, that sit in affected nuclei.
      std::map<int, std::pair<std::size_t, std::size_t>> counts;
      for (const LexiconEntry& e : lexicon) {
        for (const auto& reading : e.pronunciations) {
          for (const std::string& syl : reading) {
            const Syllable s = inv.parse(syl);
            if (s.coda != r.from_coda) continue;
            auto& c = counts[s.tone.value()];
            ++c.second;
            if (affected(s.nucleus)) ++c.first;
          }
        }
      }
      for (const auto& [t, c] : counts) {
        if (c.first == 0 || r.from_coda.empty() || r.to_coda.empty()) continue;
        const std::string to = Phone{Scheme::kONC, PhoneKind::kCoda, r.to_coda, Tone(t)}.label();
        const std::string from =
            Phone{Scheme::kONC, PhoneKind::kCoda, r.from_coda, Tone(t)}.label();
        if (present.count(to) && present.count(from)) {
          out.push_back({to, from, p * static_cast<double>(c.first) / c.second});
        }
      }
    }
  }
  return out;
}

StateModel compose_if_models(const StateModel& onc, const std::vector<std::string>& if_labels,
                             const Inventory& inv) {
  auto mean_of = [&](const std::string& label) {
    const int i = onc.index(label);
    if (i < 0) throw Error("compose_if_models: no ONC state " + label);
    return onc.mean(i);
  };
  std::vector<std::vector<double>> means;
  means.reserve(if_labels.size());
  for (const std::string& label : if_labels) {
    const std::size_t dot = label.rfind('.');
    if (dot == std::string::npos) throw Error("bad state label " + label);
    const std::string name = label.substr(0, dot);
    const int k = std::stoi(label.substr(dot + 1));
    const Phone ph = Phone::from_label(name, Scheme::kIF);
    if (ph.kind != PhoneKind::kFinal) {
      means.push_back(mean_of(label));
      continue;
    }
    const auto& parts = inv.finals().at(ph.base);
    const std::string nuc =
        Phone{Scheme::kONC, PhoneKind::kNucleus, parts.first, ph.tone}.label();
    if (parts.second.empty()) {
      means.push_back(mean_of(nuc + label.substr(dot)));
      continue;
    }
    const std::string coda =
        Phone{Scheme::kONC, PhoneKind::kCoda, parts.second, ph.tone}.label();
    // vowel centre, vowel-coda transition, coda centre
    if (k == 0) {
      means.push_back(mean_of(nuc + ".1"));
    } else if (k == 1) {
      std::vector<double> m = mean_of(nuc + ".2");
      const std::vector<double> c = mean_of(coda + ".0");
      for (std::size_t d = 0; d < m.size(); ++d) m[d] = 0.5 * (m[d] + c[d]);
      means.push_back(std::move(m));
    } else {
      means.push_back(mean_of(coda + ".1"));
    }
  }
  return StateModel(if_labels, std::move(means), onc.sigma());
}

namespace {

SchemeRun run_scheme(Scheme scheme, const ExperimentConfig& cfg, const Inventory& inv,
                     const std::vector<LexiconEntry>& words, const NGramModel& lm,
                     const std::vector<Utterance>& utts, const std::vector<std::string>& refs,
                     const MergeRuleSet& rules, const StateModel& base) {
  const std::string sname(scheme_name(scheme));
  SchemeRun run;
  run.scheme = scheme;
  const PhoneLexicon lex =
      stage(("lexicon " + sname).c_str(), [&] { return compile_lexicon(words, scheme, inv); });
  const SearchGraph graph =
      stage(("graph " + sname).c_str(), [&] { return build_graph(lex, lm); });
  run.states = static_cast<std::size_t>(graph.num_states());
  run.pdfs = static_cast<std::size_t>(graph.num_pdfs());

  std::vector<MatrixScorer> scorers = stage(("simulate " + sname).c_str(), [&] {
    run.confusion = merge_confusions(words, inv, lex, rules, cfg.merge_p);
    SimConfig sim = cfg.sim;
    sim.seed = cfg.seed;
    sim.confusion = run.confusion;
    const StateModel models = apply_confusions(
        scheme == Scheme::kONC ? base : compose_if_models(base, graph.pdf_labels(), inv),
        sim.confusion);
    std::vector<MatrixScorer> out;
    for (std::size_t i = 0; i < utts.size(); ++i) {
      PhoneSeq phones;
      std::vector<int> durations;
      for (std::size_t w = 0; w < utts[i].readings.size(); ++w) {
        for (std::size_t k = 0; k < utts[i].readings[w].size(); ++k) {
          const Syllable syl = inv.parse(utts[i].readings[w][k]);
          const PhoneSeq p = inv.to_phones(syl, scheme);
          phones.insert(phones.end(), p.begin(), p.end());
          const SyllableTiming& t = utts[i].timing[w][k];
          durations.insert(durations.end(), t.onset.begin(), t.onset.end());
          if (scheme == Scheme::kONC) {
            durations.insert(durations.end(), t.nucleus.begin(), t.nucleus.end());
            durations.insert(durations.end(), t.coda.begin(), t.coda.end());
          } else {
            int rhyme = 0;
            for (int d : t.nucleus) rhyme += d;
            for (int d : t.coda) rhyme += d;
            for (int j = 0; j < 3; ++j) durations.push_back(rhyme / 3 + (j < rhyme % 3 ? 1 : 0));
          }
        }
      }
      out.push_back(simulate_utterance(phones, models, sim,
                                       utterance_seed(cfg.seed, 2 * i + 1), &durations)
                        .scorer);
    }
    return out;
  });
  std::vector<const AcousticScorer*> ptrs;
  for (const auto& s : scorers) ptrs.push_back(&s);

  stage(("decode " + sname).c_str(), [&] {
    const BatchResult br = batch_decode(graph, ptrs, cfg.decode, cfg.workers);
    run.hyps = batch_texts(br);
    run.failures = br.failures;
    run.rtf = br.rtf;
    std::vector<std::pair<std::string, std::string>> pairs;
    for (std::size_t i = 0; i < refs.size(); ++i) pairs.emplace_back(refs[i], run.hyps[i]);
    run.wer = corpus_wer(pairs);
    return 0;
  });
  if (!cfg.sweep.beams.empty() || !cfg.sweep.max_actives.empty()) {
    run.sweep = stage(("sweep " + sname).c_str(), [&] {
      SweepGrid grid = cfg.sweep;
      if (grid.beams.empty()) grid.beams.push_back(cfg.decode.beam);
      if (grid.max_actives.empty()) grid.max_actives.push_back(cfg.decode.max_active);
      return sweep(graph, ptrs, grid, refs, cfg.decode, cfg.workers);
    });
  }
  return run;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  stage("config", [&] {
    cfg.validate();
    return 0;
  });
  const Inventory inv = stage("inventory", [&] {
    return cfg.inventory.empty() ? Inventory::bundled() : Inventory::load(cfg.inventory);
  });
  const std::vector<LexiconEntry> words =
      stage("lexicon", [&] { return read_word_lexicon(cfg.lexicon); });
  const NGramModel lm = stage("lm", [&] {
    return train_ngram(read_corpus(cfg.corpus), 2, Smoothing::kWittenBell);
  });
  const MergeRuleSet rules = stage("merge rules", [&] { return MergeRuleSet::parse(cfg.merge_rules); });
  const std::vector<Utterance> utts = stage("utterances", [&] {
    auto u = sample_utterances(words, lm, cfg.utterances, cfg.min_words, cfg.max_words, cfg.seed);
    assign_timing(u, inv, cfg.sim, cfg.seed);
    return u;
  });

  ExperimentResult r;
  r.seed = cfg.seed;
  for (const auto& u : utts) r.refs.push_back(u.text());
  // Both schemes share one set of phonetic state means, laid out on the ONC
  // units; IF finals are composed from them.
  const StateModel base = stage("acoustic models", [&] {
    SimConfig sim = cfg.sim;
    sim.seed = cfg.seed;
    sim.confusion.clear();
    return build_state_models(pdf_labels_for(compile_lexicon(words, Scheme::kONC, inv)), sim);
  });
  r.if_run = run_scheme(Scheme::kIF, cfg, inv, words, lm, utts, r.refs, rules, base);
  r.onc_run = run_scheme(Scheme::kONC, cfg, inv, words, lm, utts, r.refs, rules, base);
  r.classification = classify_errors(r.refs, r.if_run.hyps, r.onc_run.hyps);
  const double wif = r.if_run.wer.rate();
  r.relative_improvement = wif > 0.0 ? (wif - r.onc_run.wer.rate()) / wif : 0.0;
  return r;
}

namespace {

json scheme_json(const SchemeRun& s) {
  json j;
  j["scheme"] = std::string(scheme_name(s.scheme));
  j["graph_states"] = s.states;
  j["pdfs"] = s.pdfs;
  j["wer"] = wer_json(s.wer);
  j["failures"] = s.failures;
  json conf = json::array();
  for (const Confusion& c : s.confusion) conf.push_back({{"a", c.a}, {"b", c.b}, {"p", c.p}});
  j["confusion"] = conf;
  if (!s.sweep.empty()) {
    json rows = json::array();
    for (const SweepRow& row : s.sweep) {
      json rj;
      rj["beam"] = beam_json(row.beam);
      rj["max_active"] = row.max_active;
      rj["ok"] = row.ok;
      if (row.ok) {
        rj["wer"] = wer_json(row.wer);
        rj["failures"] = row.failures;
      } else {
        rj["error"] = row.error;
      }
      rows.push_back(rj);
    }
    j["sweep"] = rows;
  }
  return j;
}

}  // namespace

std::string ExperimentResult::report_json() const {
  json j;
  j["experiment"] = "onc-vs-if";
  j["seed"] = seed;
  j["utterances"] = refs.size();
  j["systems"] = {scheme_json(if_run), scheme_json(onc_run)};
  j["relative_improvement"] = relative_improvement;
  j["classification"] = json::parse(classification_json(classification, "IF", "ONC"));
  json per = json::array();
  for (std::size_t i = 0; i < refs.size(); ++i) {
    per.push_back({{"ref", refs[i]}, {"if", if_run.hyps[i]}, {"onc", onc_run.hyps[i]}});
  }
  j["per_utterance"] = per;
  return j.dump(2) + "\n";
}

std::string ExperimentResult::timing_json() const {
  json j;
  for (const SchemeRun* s : {&if_run, &onc_run}) {
    json sj;
    sj["rtf"] = s->rtf;
    json rows = json::array();
    for (const SweepRow& row : s->sweep) {
      rows.push_back({{"beam", beam_json(row.beam)},
                      {"max_active", row.max_active},
                      {"rtf", row.rtf}});
    }
    sj["sweep"] = rows;
    j[std::string(scheme_name(s->scheme))] = sj;
  }
  return j.dump(2) + "\n";
}

std::string ExperimentResult::report_text() const {
  std::string out;
  char buf[200];
  std::snprintf(buf, sizeof buf, "%-8s %8s %10s %8s\n", "system", "WER", "RTF", "pdfs");
  out += buf;
  for (const SchemeRun* s : {&if_run, &onc_run}) {
    std::snprintf(buf, sizeof buf, "%-8s %8s %10.5f %8zu\n",
                  std::string(scheme_name(s->scheme)).c_str(),
                  format_percent(s->wer.rate()).c_str(), s->rtf, s->pdfs);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "\nrelative improvement (WER_IF - WER_ONC) / WER_IF: %s\n\n",
                format_percent(relative_improvement).c_str());
  out += buf;
  out += classification_report(classification, "IF", "ONC");
  for (const SchemeRun* s : {&if_run, &onc_run}) {
    if (s->sweep.empty()) continue;
    out += "\nsweep " + std::string(scheme_name(s->scheme)) + "\n";
    out += sweep_table(s->sweep);
  }
  return out;
}

void write_experiment_outputs(const ExperimentResult& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto put = [&](const char* name, const std::string& text) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw Error("cannot write " + (dir / name).string());
    out << text;
  };
  put("report.json", r.report_json());
  put("timing.json", r.timing_json());
  put("report.txt", r.report_text());
}

}  // namespace yueasr
