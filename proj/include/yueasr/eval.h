#pragma once

// Character-level WER, two-system error classification and decoding sweeps.

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "yueasr/decoder.h"

namespace yueasr {

struct WerResult {
  std::size_t substitutions = 0;
  std::size_t insertions = 0;
  std::size_t deletions = 0;
  std::size_t ref_length = 0;

  std::size_t errors() const { return substitutions + insertions + deletions; }
  double rate() const {
    return ref_length ? static_cast<double>(errors()) / ref_length : 0.0;
  }
  bool operator==(const WerResult&) const = default;
};

/// Unit-cost edit distance. Among minimal alignments the one with the fewest
/// insertions plus deletions wins, i.e. substitutions are preferred.
WerResult wer(const std::vector<std::string>& ref, const std::vector<std::string>& hyp);
/// Normalizes both strings and compares them code point by code point.
WerResult wer(std::string_view ref, std::string_view hyp, bool strip_punctuation = false);

/// Micro average: summed components over summed reference length.
WerResult corpus_wer(const std::vector<std::pair<std::string, std::string>>& pairs,
                     bool strip_punctuation = false);

/// Removes whitespace; optionally drops ASCII and CJK punctuation.
std::string normalize_text(std::string_view text, bool strip_punctuation = false);

/// "9.66%"
std::string format_percent(double rate);

struct ErrorClassification {
  std::size_t total = 0;
  std::size_t correct_a = 0;
  std::size_t correct_b = 0;
  std::size_t errors_a_only = 0;
  std::size_t errors_b_only = 0;
  std::size_t shared_errors = 0;
  std::size_t shared_identical = 0;
  std::size_t shared_different = 0;
};

ErrorClassification classify_errors(const std::vector<std::string>& refs,
                                    const std::vector<std::string>& hyps_a,
                                    const std::vector<std::string>& hyps_b,
                                    bool strip_punctuation = false);

/// Sentence-level counts per system followed by the error breakdown.
std::string classification_report(const ErrorClassification& c,
                                   std::string_view name_a, std::string_view name_b);
std::string classification_json(const ErrorClassification& c,
                                 std::string_view name_a, std::string_view name_b);

struct SweepGrid {
  std::vector<double> beams;
  std::vector<int> max_actives;
};

struct SweepRow {
  double beam = 0.0;
  int max_active = 0;
  bool ok = false;
  WerResult wer;
  double rtf = 0.0;
  std::size_t failures = 0;  // utterances that failed to decode (scored as empty)
  std::string error;         // set when the whole cell failed
};

/// One batch_decode per grid point, rows sorted by (beam, max_active).
/// `base` supplies lm_weight and the other non-grid parameters.
std::vector<SweepRow> sweep(const SearchGraph& graph,
                            const std::vector<const AcousticScorer*>& scorers,
                            const SweepGrid& grid, const std::vector<std::string>& refs,
                            DecodeParams base = {}, int workers = 1);

std::string sweep_json(const std::vector<SweepRow>& rows);
std::string sweep_table(const std::vector<SweepRow>& rows);

/// Hypothesis text of every batch item, empty for failed items.
std::vector<std::string> batch_texts(const BatchResult& batch);

/// {wer:{S,I,D,N,rate}, rtf, params, per_utterance:[...]}
std::string eval_report_json(const std::vector<std::string>& refs,
                             const std::vector<std::string>& hyps, double rtf,
                             const DecodeParams& params);

}  // namespace yueasr
