#include "doctest.h"
#include "support.h"
#include "yueasr/error.h"
#include "yueasr/experiment.h"

using namespace yueasr;

namespace {

const Inventory& inv() { return Inventory::bundled(); }

ExperimentConfig small_config(double merge_p) {
  ExperimentConfig cfg = read_experiment_config(testing::data_path("demo.cfg"));
  cfg.utterances = 6;
  cfg.merge_p = merge_p;
  return cfg;
}

}  // namespace

TEST_CASE("experiment config") {
  const ExperimentConfig cfg = read_experiment_config(testing::data_path("demo.cfg"));
  CHECK(cfg.seed == 7);
  CHECK(cfg.has_seed);
  CHECK(cfg.min_words == 2);
  CHECK(cfg.max_words == 4);
  CHECK(cfg.lexicon.is_absolute());
  CHECK(std::filesystem::exists(cfg.lexicon));
  CHECK(cfg.decode.lm_weight == 1.0);
  CHECK_THROWS_AS(parse_experiment_config("bogus_key = 1\n", "/tmp"), Error);
  const ExperimentConfig rel = parse_experiment_config("lexicon = a/b.tsv\n", "/base");
  CHECK(rel.lexicon == std::filesystem::path("/base/a/b.tsv"));
  ExperimentConfig bad = cfg;
  bad.merge_p = 2.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("utterance sampling is seeded") {
  const auto words = read_word_lexicon(testing::data_path("demo_lexicon.tsv"));
  const NGramModel lm = train_ngram(read_corpus(testing::data_path("demo_corpus.txt")), 2,
                                    Smoothing::kWittenBell);
  const auto a = sample_utterances(words, lm, 20, 2, 4, 11);
  const auto b = sample_utterances(words, lm, 20, 2, 4, 11);
  REQUIRE(a.size() == 20);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].words == b[i].words);
    CHECK(a[i].readings == b[i].readings);
    CHECK(a[i].words.size() >= 2);
    CHECK(a[i].words.size() <= 4);
  }
  const auto c = sample_utterances(words, lm, 20, 2, 4, 12);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) differs |= a[i].words != c[i].words;
  CHECK(differs);
}

TEST_CASE("composed IF models reuse ONC means") {
  const std::vector<std::string> onc_labels = {"b.0",   "b.1",   "b.2",   "aa3.0", "aa3.1",
                                               "aa3.2", "_t3.0", "_t3.1", "_t3.2"};
  SimConfig cfg;
  cfg.seed = 5;
  const StateModel onc = build_state_models(onc_labels, cfg);
  const StateModel m =
      compose_if_models(onc, {"b.0", "b.1", "b.2", "aa3.0", "aa3.1", "aa3.2", "aat3.0",
                              "aat3.1", "aat3.2"},
                        inv());
  auto at = [](const StateModel& s, const std::string& l) { return s.mean(s.index(l)); };
  CHECK(at(m, "b.1") == at(onc, "b.1"));
  CHECK(at(m, "aa3.2") == at(onc, "aa3.2"));
  CHECK(at(m, "aat3.0") == at(onc, "aa3.1"));
  CHECK(at(m, "aat3.2") == at(onc, "_t3.1"));
  for (int d = 0; d < cfg.feature_dim; ++d) {
    CHECK(at(m, "aat3.1")[d] ==
          doctest::Approx(0.5 * (at(onc, "aa3.2")[d] + at(onc, "_t3.0")[d])));
  }
  CHECK_THROWS_AS(compose_if_models(onc, {"ik1.0"}, inv()), Error);
}

TEST_CASE("merge confusions") {
  const auto words = parse_word_lexicon("八\tbaat3\n百\tbaak3\n吉\tgat1\n得\tdak1\n");
  const MergeRuleSet rules = MergeRuleSet::parse("t>k:aa");
  const auto if_c =
      merge_confusions(words, inv(), compile_lexicon(words, Scheme::kIF, inv()), rules, 0.5);
  REQUIRE(if_c.size() == 1);
  CHECK(if_c[0].a == "aak3");
  CHECK(if_c[0].b == "aat3");
  CHECK(if_c[0].p == 0.5);
  // 八 is the only tone-3 coda t syllable and it sits under aa, so the ONC
  // share is 1. 吉 is tone 1 under a, outside the filter.
  const auto onc_c =
      merge_confusions(words, inv(), compile_lexicon(words, Scheme::kONC, inv()), rules, 0.5);
  REQUIRE(onc_c.size() == 1);
  CHECK(onc_c[0].a == "_k3");
  CHECK(onc_c[0].b == "_t3");
  CHECK(onc_c[0].p == doctest::Approx(0.5));

  const auto diluted = parse_word_lexicon("八\tbaat3\n百\tbaak3\n結\tgit3\n");
  const auto d = merge_confusions(diluted, inv(), compile_lexicon(diluted, Scheme::kONC, inv()),
                                  rules, 0.5);
  REQUIRE(d.size() == 1);
  CHECK(d[0].p == doctest::Approx(0.25));
}

TEST_CASE("experiment runs are deterministic") {
  const ExperimentConfig cfg = small_config(0.5);
  const ExperimentResult a = run_experiment(cfg);
  const ExperimentResult b = run_experiment(cfg);
  CHECK(a.report_json() == b.report_json());
  CHECK(a.refs.size() == 6);
  CHECK(a.if_run.hyps.size() == 6);
  CHECK(a.onc_run.pdfs < a.if_run.pdfs);
  CHECK(a.classification.total == 6);
  CHECK(a.report_json().find("\"rtf\"") == std::string::npos);
  CHECK(a.timing_json().find("\"rtf\"") != std::string::npos);
}

TEST_CASE("noiseless unmerged experiment is exact") {
  ExperimentConfig cfg = small_config(0.0);
  cfg.sim.noise_sigma = 0.0;
  cfg.sim.model_sigma = 1.0;
  const ExperimentResult r = run_experiment(cfg);
  CHECK(r.if_run.wer.errors() == 0);
  CHECK(r.onc_run.wer.errors() == 0);
  CHECK(r.relative_improvement == 0.0);
}
