#pragma once

// Paired IF-vs-ONC simulation: one word-level utterance set, one acoustic seed
// stream per utterance, decoded under both phone schemes.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "yueasr/acoustic_sim.h"
#include "yueasr/decoder.h"
#include "yueasr/eval.h"
#include "yueasr/lexicon.h"
#include "yueasr/ngram_lm.h"
#include "yueasr/phonology.h"

namespace yueasr {

struct ExperimentConfig {
  std::filesystem::path lexicon;    // word lexicon (word<TAB>jyutping)
  std::filesystem::path corpus;     // LM training text
  std::filesystem::path inventory;  // empty: bundled inventory
  std::filesystem::path output_dir;
  std::uint64_t seed = 0;
  bool has_seed = false;  // a seed must come from the file or the caller
  int utterances = 50;
  int min_words = 2;
  int max_words = 4;
  std::string merge_rules = "t>k:aa|a|o;ng>n:a|aa";
  double merge_p = 0.5;
  SimConfig sim;          // seed and confusion are filled per run
  DecodeParams decode;
  SweepGrid sweep;        // optional, empty = no sweep
  int workers = 1;

  /// Throws Error naming the first invalid field or missing path.
  void validate() const;
};

/// Relative paths in the file are resolved against the file's directory.
ExperimentConfig read_experiment_config(const std::filesystem::path& path);
ExperimentConfig parse_experiment_config(std::string_view text,
                                         const std::filesystem::path& base_dir);

/// Frames per HMM state of one syllable at onset/nucleus/coda resolution;
/// onset and coda are empty when NULL. IF finals spread the nucleus and coda
/// frames evenly over their three states.
struct SyllableTiming {
  std::vector<int> onset;
  std::vector<int> nucleus;
  std::vector<int> coda;
};

struct Utterance {
  std::vector<std::string> words;
  std::vector<std::vector<std::string>> readings;  // one syllable list per word
  std::vector<std::vector<SyllableTiming>> timing;  // parallel to readings
  std::string text() const;
};

/// Seeded word sequences drawn from `lm` restricted to lexicon words: each
/// word is picked with probability proportional to its character-chain
/// probability after the previous word's last character. Readings are
/// picked uniformly.
std::vector<Utterance> sample_utterances(const std::vector<LexiconEntry>& lexicon,
                                         const NGramModel& lm, int count, int min_words,
                                         int max_words, std::uint64_t seed);

/// Seeded state durations shared by both schemes.
void assign_timing(std::vector<Utterance>& utts, const Inventory& inv, const SimConfig& sim,
                   std::uint64_t seed);

/// Per-scheme confusion entries realizing a coda merge with probability p.
/// IF blends whole finals of affected nuclei; ONC blends the shared coda phone
/// with p scaled by the share of the merged coda's lexicon occurrences that
/// fall in affected nuclei.
std::vector<Confusion> merge_confusions(const std::vector<LexiconEntry>& lexicon,
                                        const Inventory& inv, const PhoneLexicon& lex,
                                        const MergeRuleSet& rules, double p);

/// IF state models composed from ONC ones. An open final copies its
/// nucleus states; a closed final takes the nucleus centre, the mean of the
/// nucleus end and coda start, and the coda centre. Initials copy onsets.
StateModel compose_if_models(const StateModel& onc, const std::vector<std::string>& if_labels,
                             const Inventory& inv);

struct SchemeRun {
  Scheme scheme = Scheme::kIF;
  std::size_t states = 0;
  std::size_t pdfs = 0;
  std::vector<std::string> hyps;
  WerResult wer;
  std::size_t failures = 0;
  double rtf = 0.0;
  std::vector<Confusion> confusion;
  std::vector<SweepRow> sweep;
};

struct ExperimentResult {
  std::uint64_t seed = 0;
  std::vector<std::string> refs;
  SchemeRun if_run;
  SchemeRun onc_run;
  ErrorClassification classification;  // a = IF, b = ONC
  double relative_improvement = 0.0;   // (WER_IF - WER_ONC) / WER_IF, 0 if WER_IF = 0

  /// Deterministic summary without wall-clock values.
  std::string report_json() const;
  /// Wall-clock derived values (RTF per scheme and sweep cell).
  std::string timing_json() const;
  /// Table-shaped text including RTF.
  std::string report_text() const;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Writes report.json, timing.json and report.txt under cfg.output_dir.
void write_experiment_outputs(const ExperimentResult& r,
                              const std::filesystem::path& dir);

}  // namespace yueasr
