// yueasr command-line entry point.
//
// Exit codes: 0 success, 1 usage error, 2 data error.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "yueasr/acoustic_sim.h"
#include "yueasr/decoder.h"
#include "yueasr/error.h"
#include "yueasr/eval.h"
#include "yueasr/experiment.h"
#include "yueasr/lattice.h"
#include "yueasr/lexicon.h"
#include "yueasr/ngram_lm.h"
#include "yueasr/phonology.h"
#include "yueasr/utf8.h"

namespace {

using json = nlohmann::ordered_json;
using namespace yueasr;

struct Globals {
  bool json_out = false;
  long long seed = 0;
  bool seed_set = false;
  int workers = 1;
  std::string inventory;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::vector<std::string> out;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(line);
  }
  while (!out.empty() && out.back().empty()) out.pop_back();
  return out;
}

const Inventory& inventory(const Globals& g) {
  static Inventory loaded;
  static bool have = false;
  if (g.inventory.empty()) return Inventory::bundled();
  if (!have) {
    loaded = Inventory::load(g.inventory);
    have = true;
  }
  return loaded;
}

json opt_str(const std::string& s) { return s.empty() ? json(nullptr) : json(s); }

json wer_json(const WerResult& w) {
  return {{"S", w.substitutions}, {"I", w.insertions}, {"D", w.deletions},
          {"N", w.ref_length}, {"rate", w.rate()}};
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double parse_beam(const std::string& s) {
  if (s == "inf") return DecodeParams::kInfiniteBeam;
  try {
    std::size_t used = 0;
    const double d = std::stod(s, &used);
    if (used == s.size()) return d;
  } catch (const std::exception&) {
  }
  throw CLI::ValidationError("beam", "expected a number or inf, got " + s);
}

std::string node_path(const Hypothesis& h) {
  std::string out;
  for (int n : h.nodes) out += (out.empty() ? "" : "-") + std::to_string(n);
  return out;
}

json hyp_json(const Hypothesis& h) {
  return {{"text", h.text()}, {"words", h.words}, {"am", h.am_total},
          {"lm", h.lm_total}, {"combined", h.combined()}, {"path", node_path(h)}};
}

void print_hyp(const Hypothesis& h) {
  std::printf("%s\tam=%.6f lm=%.6f combined=%.6f", h.text(" ").c_str(), h.am_total,
              h.lm_total, h.combined());
  if (!h.nodes.empty()) std::printf(" path=%s", node_path(h).c_str());
  std::printf("\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"yueasr: Cantonese phone-scheme ASR toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(YUEASR_VERSION));
  Globals g;
  app.add_flag("--json", g.json_out, "Machine-readable JSON on stdout");
  auto* seed_opt = app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--workers", g.workers, "Parallel workers")->check(CLI::PositiveNumber);
  app.add_option("--inventory", g.inventory, "Inventory TSV (default: bundled)");

  // parse
  auto* parse = app.add_subcommand("parse", "Parse Jyutping syllables");
  std::vector<std::string> syllables;
  parse->add_option("syllables", syllables, "Jyutping syllables")->required();

  // lexicon
  auto* lexicon = app.add_subcommand("lexicon", "Compile or inspect lexica");
  lexicon->require_subcommand(1);
  std::string lex_in, lex_scheme = "onc", lex_merge, lex_out;
  auto* lex_compile = lexicon->add_subcommand("compile", "Compile a word lexicon");
  auto* lex_stats = lexicon->add_subcommand("stats", "Lexicon statistics");
  for (auto* sc : {lex_compile, lex_stats}) {
    sc->add_option("--lexicon", lex_in, "Word lexicon TSV")->required();
    sc->add_option("--scheme", lex_scheme, "if or onc");
    sc->add_option("--merge", lex_merge, "Coda merge rules, e.g. t>k:aa|a|o");
  }
  lex_compile->add_option("--out", lex_out, "Output directory")->required();

  // lm
  auto* lm = app.add_subcommand("lm", "Language models");
  lm->require_subcommand(1);
  auto* lm_train = lm->add_subcommand("train", "Train an n-gram model");
  std::string lm_corpus, lm_out, lm_smoothing = "wb";
  int lm_order = 2;
  lm_train->add_option("--corpus", lm_corpus)->required();
  lm_train->add_option("--order", lm_order)->check(CLI::Range(1, 10));
  lm_train->add_option("--smoothing", lm_smoothing, "wb or none");
  lm_train->add_option("--out", lm_out, "ARPA output")->required();
  auto* lm_interp = lm->add_subcommand("interpolate", "Linearly interpolate two models");
  std::string lm_a, lm_b, lm_heldout;
  double lm_lambda = -1.0;
  lm_interp->add_option("--a", lm_a)->required();
  lm_interp->add_option("--b", lm_b)->required();
  auto* lambda_opt = lm_interp->add_option("--lambda", lm_lambda)->check(CLI::Range(0.0, 1.0));
  auto* heldout_opt = lm_interp->add_option("--heldout", lm_heldout, "Tune lambda by EM");
  lambda_opt->excludes(heldout_opt);
  lm_interp->add_option("--out", lm_out)->required();
  auto* lm_ppl = lm->add_subcommand("perplexity", "Perplexity of a text");
  std::string lm_model, lm_text;
  double unk_floor = kDefaultUnkFloor;
  lm_ppl->add_option("--lm", lm_model)->required();
  lm_ppl->add_option("--text", lm_text)->required();
  lm_ppl->add_option("--unk-floor", unk_floor);

  // graph
  auto* graph = app.add_subcommand("graph", "Search graphs");
  graph->require_subcommand(1);
  auto* graph_build = graph->add_subcommand("build", "Build a decoding graph");
  std::string g_lex, g_scheme = "onc", g_lm, g_out;
  TransitionParams tp;
  graph_build->add_option("--lexicon", g_lex)->required();
  graph_build->add_option("--scheme", g_scheme);
  graph_build->add_option("--lm", g_lm, "Bigram ARPA")->required();
  graph_build->add_option("--self-loop", tp.self_loop);
  graph_build->add_option("--forward", tp.forward);
  graph_build->add_option("--out", g_out)->required();

  // decode
  auto* decode_cmd = app.add_subcommand("decode", "Decode FSCR score matrices");
  std::string d_graph, d_lattice_out, d_beam = "15";
  std::vector<std::string> d_scores;
  DecodeParams dp;
  decode_cmd->add_option("--graph", d_graph)->required();
  decode_cmd->add_option("--scores", d_scores, "FSCR files")->required();
  decode_cmd->add_option("--beam", d_beam, "Beam (natural log) or inf");
  decode_cmd->add_option("--max-active", dp.max_active)->check(CLI::PositiveNumber);
  decode_cmd->add_option("--lm-weight", dp.lm_weight)->check(CLI::PositiveNumber);
  decode_cmd->add_option("--lattice-top-k", dp.lattice_top_k)->check(CLI::NonNegativeNumber);
  decode_cmd->add_option("--lattice-out", d_lattice_out, "Lattice file (single input)");

  // rescore
  auto* rescore = app.add_subcommand("rescore", "Rescore a lattice with an n-gram model");
  std::string r_lat, r_lm, r_out;
  double lm_weight = kDefaultLmWeight;
  rescore->add_option("--lattice", r_lat)->required();
  rescore->add_option("--lm", r_lm)->required();
  rescore->add_option("--lm-weight", lm_weight);
  rescore->add_option("--out", r_out, "Rescored lattice");

  // nbest
  auto* nbest_cmd = app.add_subcommand("nbest", "N-best list from a lattice");
  std::string n_lat, n_ext;
  int n_count = kDefaultNBest;
  double n_interp = 0.5;
  nbest_cmd->add_option("--lattice", n_lat)->required();
  nbest_cmd->add_option("-n", n_count)->check(CLI::PositiveNumber);
  nbest_cmd->add_option("--lm-weight", lm_weight);
  nbest_cmd->add_option("--external", n_ext, "TSV of words<TAB>lm score for rescoring");
  nbest_cmd->add_option("--interpolation", n_interp)->check(CLI::Range(0.0, 1.0));

  // score
  auto* score = app.add_subcommand("score", "Scoring");
  score->require_subcommand(1);
  auto* score_wer = score->add_subcommand("wer", "Character error rate");
  std::string s_ref, s_hyp, s_hyp_b;
  bool strip_punct = false;
  score_wer->add_option("--ref", s_ref)->required();
  score_wer->add_option("--hyp", s_hyp)->required();
  score_wer->add_flag("--strip-punctuation", strip_punct);
  auto* score_cls = score->add_subcommand("classify", "Two-system error classification");
  score_cls->add_option("--ref", s_ref)->required();
  score_cls->add_option("--hyp-a", s_hyp)->required();
  score_cls->add_option("--hyp-b", s_hyp_b)->required();
  score_cls->add_flag("--strip-punctuation", strip_punct);

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "Beam / max-active sweep");
  std::string sw_graph, sw_refs, sw_beams = "15", sw_actives = "7000";
  std::vector<std::string> sw_scores;
  sweep_cmd->add_option("--graph", sw_graph)->required();
  sweep_cmd->add_option("--scores", sw_scores)->required();
  sweep_cmd->add_option("--refs", sw_refs, "One reference per scores file")->required();
  sweep_cmd->add_option("--beams", sw_beams, "Comma separated");
  sweep_cmd->add_option("--max-actives", sw_actives, "Comma separated");
  sweep_cmd->add_option("--lm-weight", dp.lm_weight);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Synthesize an FSCR score matrix");
  std::string sim_lex, sim_scheme = "onc", sim_words, sim_cfg, sim_out;
  simulate->add_option("--lexicon", sim_lex)->required();
  simulate->add_option("--scheme", sim_scheme);
  simulate->add_option("--words", sim_words, "Space separated words")->required();
  simulate->add_option("--config", sim_cfg, "Simulation config");
  simulate->add_option("--out", sim_out, "FSCR output")->required();

  // experiment
  auto* experiment = app.add_subcommand("experiment", "Experiments");
  experiment->require_subcommand(1);
  auto* onc_vs_if = experiment->add_subcommand("onc-vs-if", "Paired IF vs ONC simulation");
  std::string e_cfg, e_out;
  onc_vs_if->add_option("--config", e_cfg)->required();
  onc_vs_if->add_option("--out", e_out, "Output directory (overrides config)");

  // Global flags are accepted after any subcommand.
  std::vector<CLI::App*> pending{&app};
  while (!pending.empty()) {
    CLI::App* a = pending.back();
    pending.pop_back();
    for (CLI::App* sub : a->get_subcommands({})) {
      sub->fallthrough();
      pending.push_back(sub);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  g.seed_set = seed_opt->count() > 0;

  try {
    if (*parse) {
      const Inventory& inv = inventory(g);
      json arr = json::array();
      for (const std::string& s : syllables) {
        const Syllable syl = inv.parse(s);
        if (g.json_out) {
          json j{{"onset", opt_str(syl.onset)},
                 {"nucleus", syl.nucleus},
                 {"coda", opt_str(syl.coda)},
                 {"tone", syl.tone.value()}};
          arr.push_back(j);
        } else {
          std::printf("%s\tonset=%s nucleus=%s coda=%s tone=%d\tIF: %s\tONC: %s\n",
                      s.c_str(), syl.onset.empty() ? "-" : syl.onset.c_str(),
                      syl.nucleus.c_str(), syl.coda.empty() ? "-" : syl.coda.c_str(),
                      syl.tone.value(), join_labels(inv.to_if(syl)).c_str(),
                      join_labels(inv.to_onc(syl)).c_str());
        }
      }
      if (g.json_out) std::cout << (arr.size() == 1 ? arr[0] : arr).dump() << "\n";
      return 0;
    }

    if (*lexicon) {
      const Inventory& inv = inventory(g);
      const MergeRuleSet merges = MergeRuleSet::parse(lex_merge);
      const PhoneLexicon lex = compile_lexicon(read_word_lexicon(lex_in),
                                               parse_scheme(lex_scheme), inv,
                                               merges.empty() ? nullptr : &merges);
      const LexiconStats st = lexicon_stats(lex);
      if (*lex_compile) {
        write_phone_lexicon(lex, lex_out);
        std::cerr << "wrote " << lex_out << "\n";
      }
      if (g.json_out) {
        std::cout << json{{"scheme", std::string(scheme_name(lex.scheme))},
                          {"entries", st.entries},
                          {"pronunciations", st.pronunciations},
                          {"variants", st.variants},
                          {"phones", st.phone_set_size}}
                         .dump()
                  << "\n";
      } else {
        std::cout << st.to_string() << "\n";
      }
      return 0;
    }

    if (*lm_train) {
      Smoothing sm;
      if (lm_smoothing == "wb") {
        sm = Smoothing::kWittenBell;
      } else if (lm_smoothing == "none") {
        sm = Smoothing::kNone;
      } else {
        std::cerr << "error: --smoothing must be wb or none\n";
        return 1;
      }
      const NGramModel m = train_ngram(read_corpus(lm_corpus), lm_order, sm);
      write_arpa(m, lm_out);
      json j{{"order", m.order()}, {"vocab", m.vocab_size()}};
      json counts = json::array();
      for (int n = 1; n <= m.order(); ++n) counts.push_back(m.num_ngrams(n));
      j["ngrams"] = counts;
      if (g.json_out) {
        std::cout << j.dump() << "\n";
      } else {
        std::cerr << "wrote " << lm_out << "\n";
      }
      return 0;
    }

    if (*lm_interp) {
      const NGramModel a = read_arpa(lm_a), b = read_arpa(lm_b);
      double lambda = lm_lambda;
      if (!lm_heldout.empty()) {
        lambda = tune_lambda(a, b, read_corpus(lm_heldout));
      } else if (lambda < 0.0) {
        std::cerr << "error: one of --lambda or --heldout is required\n";
        return 1;
      }
      write_arpa(interpolate(a, b, lambda), lm_out);
      if (g.json_out) {
        std::cout << json{{"lambda", lambda}}.dump() << "\n";
      } else {
        std::cout << "lambda " << fmt("%.6f", lambda) << "\n";
      }
      return 0;
    }

    if (*lm_ppl) {
      const NGramModel m = read_arpa(lm_model);
      const auto text = read_corpus(lm_text);
      const LogProbTotal t = score_text(m, text, unk_floor);
      const double ppl = perplexity(m, text, unk_floor);
      if (g.json_out) {
        std::cout << json{{"perplexity", ppl}, {"log10_sum", t.log10_sum},
                          {"tokens", t.tokens}, {"oovs", t.oovs}}
                         .dump()
                  << "\n";
      } else {
        std::printf("perplexity %.6f tokens %zu oovs %zu\n", ppl, t.tokens, t.oovs);
      }
      return 0;
    }

    if (*graph_build) {
      const PhoneLexicon lex = compile_lexicon(read_word_lexicon(g_lex),
                                               parse_scheme(g_scheme), inventory(g));
      const SearchGraph sg = build_graph(lex, read_arpa(g_lm), tp);
      for (const auto& w : sg.warnings()) std::cerr << "warning: " << w << "\n";
      write_file(g_out, sg.to_text());
      if (g.json_out) {
        std::cout << json{{"states", sg.num_states()}, {"arcs", sg.num_arcs()},
                          {"pdfs", sg.num_pdfs()}, {"words", sg.words().size()},
                          {"warnings", sg.warnings().size()}}
                         .dump()
                  << "\n";
      } else {
        std::printf("states %d arcs %zu pdfs %d\n", sg.num_states(), sg.num_arcs(),
                    sg.num_pdfs());
      }
      return 0;
    }

    if (*decode_cmd) {
      dp.beam = parse_beam(d_beam);
      dp.build_lattice = !d_lattice_out.empty();
      if (dp.build_lattice && d_scores.size() != 1) {
        std::cerr << "error: --lattice-out needs exactly one --scores file\n";
        return 1;
      }
      const SearchGraph sg = SearchGraph::from_text(read_file(d_graph));
      std::vector<MatrixScorer> scorers;
      for (const auto& f : d_scores) scorers.push_back(MatrixScorer::read(f));
      std::vector<const AcousticScorer*> ptrs;
      for (const auto& s : scorers) ptrs.push_back(&s);
      const BatchResult br = batch_decode(sg, ptrs, dp, g.workers);
      json items = json::array();
      for (std::size_t i = 0; i < br.items.size(); ++i) {
        const BatchItem& it = br.items[i];
        if (!it.ok) std::cerr << d_scores[i] << ": " << it.error << "\n";
        if (g.json_out) {
          json j{{"file", d_scores[i]}, {"ok", it.ok}};
          if (it.ok) {
            j["hypothesis"] = hyp_json(it.result.hypothesis);
            j["stats"] = json::parse(it.result.stats.to_json());
          } else {
            j["error"] = it.error;
          }
          items.push_back(j);
        } else if (it.ok) {
          std::printf("%s\t%s\n", d_scores[i].c_str(),
                      it.result.hypothesis.text(" ").c_str());
          std::cerr << it.result.stats.to_json() << "\n";
        }
        if (it.ok && dp.build_lattice) write_lattice(it.result.lattice, d_lattice_out);
      }
      if (g.json_out) {
        std::cout << json{{"utterances", items}, {"rtf", br.rtf}, {"failures", br.failures}}
                         .dump()
                  << "\n";
      }
      return br.failures == br.items.size() ? 2 : 0;
    }

    if (*rescore) {
      const Lattice lat = read_lattice(r_lat);
      const NGramModel m = read_arpa(r_lm);
      const Hypothesis before = best_path(lat, lm_weight);
      const Lattice out = rescore_ngram(lat, m);
      const Hypothesis after = best_path(out, lm_weight);
      if (!r_out.empty()) write_lattice(out, r_out);
      if (g.json_out) {
        std::cout << json{{"before", hyp_json(before)}, {"after", hyp_json(after)},
                          {"changed", before.words != after.words}}
                         .dump()
                  << "\n";
      } else {
        std::printf("before\t");
        print_hyp(before);
        std::printf("after\t");
        print_hyp(after);
      }
      return 0;
    }

    if (*nbest_cmd) {
      std::vector<Hypothesis> hyps = nbest(read_lattice(n_lat), n_count, lm_weight);
      if (!n_ext.empty()) {
        std::map<std::string, double> scores;
        std::size_t lineno = 0;
        for (const std::string& line : read_lines(n_ext)) {
          ++lineno;
          if (line.empty()) continue;
          const auto tab = line.rfind('\t');
          if (tab == std::string::npos) throw ParseError("expected words<TAB>score", lineno);
          try {
            scores[line.substr(0, tab)] = std::stod(line.substr(tab + 1));
          } catch (const std::exception&) {
            throw ParseError("bad score", lineno);
          }
        }
        hyps = rescore_external(std::move(hyps), scores, n_interp);
      }
      if (g.json_out) {
        json arr = json::array();
        for (const auto& h : hyps) arr.push_back(hyp_json(h));
        std::cout << arr.dump() << "\n";
      } else {
        for (const auto& h : hyps) print_hyp(h);
      }
      return 0;
    }

    if (*score_wer) {
      const auto refs = read_lines(s_ref), hyps = read_lines(s_hyp);
      if (refs.size() != hyps.size()) {
        throw Error("reference and hypothesis files differ in line count");
      }
      std::vector<std::pair<std::string, std::string>> pairs;
      for (std::size_t i = 0; i < refs.size(); ++i) pairs.emplace_back(refs[i], hyps[i]);
      const WerResult w = corpus_wer(pairs, strip_punct);
      if (g.json_out) {
        std::cout << wer_json(w).dump() << "\n";
      } else {
        std::printf("S=%zu I=%zu D=%zu N=%zu rate %.4f (%s)\n", w.substitutions,
                    w.insertions, w.deletions, w.ref_length, w.rate(),
                    format_percent(w.rate()).c_str());
      }
      return 0;
    }

    if (*score_cls) {
      const ErrorClassification c =
          classify_errors(read_lines(s_ref), read_lines(s_hyp), read_lines(s_hyp_b),
                          strip_punct);
      if (g.json_out) {
        std::cout << json::parse(classification_json(c, "A", "B")).dump() << "\n";
      } else {
        std::cout << classification_report(c, "A", "B");
      }
      return 0;
    }

    if (*sweep_cmd) {
      const SearchGraph sg = SearchGraph::from_text(read_file(sw_graph));
      std::vector<MatrixScorer> scorers;
      for (const auto& f : sw_scores) scorers.push_back(MatrixScorer::read(f));
      std::vector<const AcousticScorer*> ptrs;
      for (const auto& s : scorers) ptrs.push_back(&s);
      SweepGrid grid;
      for (const auto& b : CLI::detail::split(sw_beams, ',')) grid.beams.push_back(parse_beam(b));
      for (const auto& m : CLI::detail::split(sw_actives, ',')) {
        grid.max_actives.push_back(std::stoi(m));
      }
      DecodeParams base;
      base.lm_weight = dp.lm_weight;
      base.build_lattice = false;
      const auto rows = sweep(sg, ptrs, grid, read_lines(sw_refs), base, g.workers);
      std::cout << (g.json_out ? sweep_json(rows) + "\n" : sweep_table(rows));
      return 0;
    }

    if (*simulate) {
      const Inventory& inv = inventory(g);
      const auto entries = read_word_lexicon(sim_lex);
      const Scheme scheme = parse_scheme(sim_scheme);
      const PhoneLexicon lex = compile_lexicon(entries, scheme, inv);
      SimConfig cfg = sim_cfg.empty() ? SimConfig{} : read_sim_config(sim_cfg);
      if (g.seed_set) cfg.seed = static_cast<std::uint64_t>(g.seed);
      PhoneSeq phones;
      std::istringstream ws(sim_words);
      for (std::string w; ws >> w;) {
        auto it = lex.entries.find(w);
        if (it == lex.entries.end()) throw Error("word not in lexicon: " + w);
        phones.insert(phones.end(), it->second.front().begin(), it->second.front().end());
      }
      const StateModel models = build_state_models(pdf_labels_for(lex), cfg);
      const SimulatedUtterance u = simulate_utterance(phones, models, cfg, cfg.seed);
      u.scorer.write(sim_out);
      if (g.json_out) {
        std::cout << json{{"frames", u.scorer.num_frames()},
                          {"labels", u.scorer.num_labels()},
                          {"audio_seconds", u.scorer.audio_seconds()},
                          {"phones", join_labels(phones)}}
                         .dump()
                  << "\n";
      } else {
        std::printf("frames %d labels %d phones %s\n", u.scorer.num_frames(),
                    u.scorer.num_labels(), join_labels(phones).c_str());
      }
      return 0;
    }

    if (*onc_vs_if) {
      ExperimentConfig cfg = read_experiment_config(e_cfg);
      if (g.seed_set) {
        cfg.seed = static_cast<std::uint64_t>(g.seed);
        cfg.has_seed = true;
      }
      if (!e_out.empty()) cfg.output_dir = e_out;
      if (app.get_option("--workers")->count()) cfg.workers = g.workers;
      const ExperimentResult r = run_experiment(cfg);
      if (!cfg.output_dir.empty()) {
        write_experiment_outputs(r, cfg.output_dir);
        std::cerr << "wrote " << cfg.output_dir.string() << "\n";
      }
      std::cout << (g.json_out ? r.report_json() : r.report_text());
      return 0;
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
