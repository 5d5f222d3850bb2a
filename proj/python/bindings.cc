#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "yueasr/acoustic_sim.h"
#include "yueasr/decoder.h"
#include "yueasr/error.h"
#include "yueasr/eval.h"
#include "yueasr/experiment.h"
#include "yueasr/lattice.h"
#include "yueasr/lexicon.h"
#include "yueasr/ngram_lm.h"
#include "yueasr/phonology.h"

namespace py = pybind11;
using namespace yueasr;

namespace {

const Inventory& inv() { return Inventory::bundled(); }

std::vector<std::string> labels(const PhoneSeq& seq) {
  std::vector<std::string> out;
  for (const Phone& p : seq) out.push_back(p.label());
  return out;
}

py::dict syllable_dict(const Syllable& s) {
  py::dict d;
  d["onset"] = s.onset;
  d["nucleus"] = s.nucleus;
  d["coda"] = s.coda;
  d["tone"] = s.tone.value();
  return d;
}

py::dict hypothesis_dict(const Hypothesis& h) {
  py::dict d;
  d["words"] = h.words;
  d["nodes"] = h.nodes;
  d["am"] = h.am_total;
  d["lm"] = h.lm_total;
  d["score"] = h.combined();
  d["text"] = h.text();
  return d;
}

py::dict wer_dict(const WerResult& w) {
  py::dict d;
  d["S"] = w.substitutions;
  d["I"] = w.insertions;
  d["D"] = w.deletions;
  d["N"] = w.ref_length;
  d["rate"] = w.rate();
  return d;
}

}  // namespace

PYBIND11_MODULE(_yueasr, m) {
  m.doc() = "Cantonese ASR phone-set toolkit";
  m.attr("__version__") = YUEASR_VERSION;

  // Translators run newest first, so the base class goes in first.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<SyllableError>(m, "SyllableError", PyExc_ValueError);
  py::register_exception<DecodeError>(m, "DecodeError", PyExc_RuntimeError);

  m.def("parse", [](const std::string& s) { return syllable_dict(inv().parse(s)); },
        py::arg("syllable"));
  m.def("to_phones",
        [](const std::string& s, const std::string& scheme) {
          return labels(inv().to_phones(inv().parse(s), parse_scheme(scheme)));
        },
        py::arg("syllable"), py::arg("scheme") = "onc");
  m.def("apply_merge",
        [](const std::string& s, const std::string& rules) {
          return inv().render(inv().apply_merge(inv().parse(s), MergeRuleSet::parse(rules)));
        },
        py::arg("syllable"), py::arg("rules"));
  m.def("inventory_sizes", [] {
    py::dict d;
    d["onsets"] = inv().onsets().size();
    d["nuclei"] = inv().nuclei().size();
    d["codas"] = inv().codas().size();
    d["finals"] = inv().finals().size();
    return d;
  });

  m.def("compile_lexicon",
        [](const std::string& text, const std::string& scheme, const std::string& merge) {
          const MergeRuleSet rules = MergeRuleSet::parse(merge);
          const PhoneLexicon lex = compile_lexicon(parse_word_lexicon(text), parse_scheme(scheme),
                                                   inv(), rules.empty() ? nullptr : &rules);
          std::map<std::string, std::vector<std::vector<std::string>>> out;
          for (const auto& [word, prons] : lex.entries) {
            for (const PhoneSeq& p : prons) out[word].push_back(labels(p));
          }
          return out;
        },
        py::arg("text"), py::arg("scheme") = "onc", py::arg("merge") = "");

  py::class_<NGramModel>(m, "NGramModel")
      .def_property_readonly("order", &NGramModel::order)
      .def("logprob",
           [](const NGramModel& lm, const std::vector<std::string>& h, const std::string& w) {
             return lm.logprob(h, w);
           },
           py::arg("history"), py::arg("word"))
      .def("to_arpa", [](const NGramModel& lm) { return to_arpa(lm); });
  m.def("train_ngram",
        [](const std::vector<Sentence>& corpus, int order, const std::string& smoothing) {
          return train_ngram(corpus, order,
                             smoothing == "none" ? Smoothing::kNone : Smoothing::kWittenBell);
        },
        py::arg("corpus"), py::arg("order") = 2, py::arg("smoothing") = "wb");
  m.def("parse_arpa", [](const std::string& text) { return parse_arpa(text); });
  m.def("read_corpus", [](const std::filesystem::path& p) { return read_corpus(p); });
  m.def("perplexity",
        [](const NGramModel& lm, const std::vector<Sentence>& text) {
          return perplexity(lm, text);
        });
  m.def("interpolate", &interpolate, py::arg("a"), py::arg("b"), py::arg("weight"));
  m.def("tune_lambda",
        [](const NGramModel& a, const NGramModel& b, const std::vector<Sentence>& held) {
          return tune_lambda(a, b, held);
        });

  m.def("nbest",
        [](const std::string& lattice_text, int n, double lm_weight) {
          py::list out;
          for (const Hypothesis& h : nbest(parse_lattice(lattice_text), n, lm_weight)) {
            out.append(hypothesis_dict(h));
          }
          return out;
        },
        py::arg("lattice"), py::arg("n") = kDefaultNBest, py::arg("lm_weight") = 1.0);
  m.def("rescore_best",
        [](const std::string& lattice_text, const NGramModel& lm, double lm_weight) {
          return hypothesis_dict(best_path(rescore_ngram(parse_lattice(lattice_text), lm), lm_weight));
        },
        py::arg("lattice"), py::arg("lm"), py::arg("lm_weight") = 1.0);

  m.def("decode_words",
        [](const std::string& lexicon_text, const NGramModel& lm,
           const std::vector<std::string>& words, const std::string& scheme, std::uint64_t seed,
           double beam, int max_active, double lm_weight) {
          const auto entries = parse_word_lexicon(lexicon_text);
          const Scheme sc = parse_scheme(scheme);
          const PhoneLexicon lex = compile_lexicon(entries, sc, inv());
          const SearchGraph g = build_graph(lex, lm);
          SimConfig sim;
          sim.seed = seed;
          const StateModel models = build_state_models(g.pdf_labels(), sim);
          PhoneSeq phones;
          for (const std::string& w : words) {
            const auto it = lex.entries.find(w);
            if (it == lex.entries.end()) throw Error("word not in lexicon: " + w);
            phones.insert(phones.end(), it->second[0].begin(), it->second[0].end());
          }
          const SimulatedUtterance u = simulate_utterance(phones, models, sim, seed);
          DecodeParams p;
          p.beam = beam;
          p.max_active = max_active;
          p.lm_weight = lm_weight;
          const DecodeResult r = decode(g, u.scorer, p);
          py::dict d = hypothesis_dict(r.hypothesis);
          d["frames"] = r.stats.frames;
          d["rtf"] = r.stats.rtf;
          return d;
        },
        py::arg("lexicon"), py::arg("lm"), py::arg("words"), py::arg("scheme") = "onc",
        py::arg("seed") = 0, py::arg("beam") = 15.0, py::arg("max_active") = 7000,
        py::arg("lm_weight") = 1.0);

  m.def("wer",
        [](const std::string& ref, const std::string& hyp, bool strip) {
          return wer_dict(wer(ref, hyp, strip));
        },
        py::arg("ref"), py::arg("hyp"), py::arg("strip_punctuation") = false);
  m.def("corpus_wer",
        [](const std::vector<std::pair<std::string, std::string>>& pairs) {
          return wer_dict(corpus_wer(pairs));
        });
  m.def("classify_errors",
        [](const std::vector<std::string>& refs, const std::vector<std::string>& a,
           const std::vector<std::string>& b) {
          return classification_json(classify_errors(refs, a, b), "a", "b");
        });

  m.def("run_experiment",
        [](const std::filesystem::path& config, std::optional<std::uint64_t> seed,
           std::optional<int> utterances) {
          ExperimentConfig cfg = read_experiment_config(config);
          if (seed) cfg.seed = *seed;
          if (utterances) cfg.utterances = *utterances;
          py::gil_scoped_release release;
          return run_experiment(cfg).report_json();
        },
        py::arg("config"), py::arg("seed") = py::none(), py::arg("utterances") = py::none());
}
