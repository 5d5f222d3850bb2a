#pragma once

// Phone-HMM search graph and a frame-synchronous token-passing Viterbi
// decoder with beam and max-active pruning.
//
// Graph layout (word loop with bigram histories over characters):
//   - one non-emitting history state per distinct word-final character, plus
//     the start state for <s>;
//   - every pronunciation expands each phone into three emitting states; each
//     emitting state has a self-loop and a forward arc, both labelled with its
//     own pdf, so every emitting arc consumes one frame scored by the state it
//     leaves;
//   - the forward arc of a word's last state enters the history state of the
//     word's last character;
//   - epsilon entry arcs go from every history state to the first state of
//     every pronunciation, carry the word output, and hold the character
//     bigram log probability of the word given the history character.

#include <cstdint>
#include <filesystem>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "yueasr/error.h"
#include "yueasr/lattice.h"
#include "yueasr/lexicon.h"
#include "yueasr/ngram_lm.h"

namespace yueasr {

inline constexpr int kNoPdf = -1;
inline constexpr int kNoWord = -1;
inline constexpr double kFrameShiftSeconds = 0.01;

struct GraphArc {
  int to = 0;
  int pdf = kNoPdf;    // kNoPdf on epsilon arcs
  int word = kNoWord;  // word output, entry arcs only
  double weight = 0.0; // transition log probability (natural log)
  double lm = 0.0;     // LM log probability (natural log), scaled at decode time
};

struct TransitionParams {
  double self_loop = 0.5;
  double forward = 0.5;
};

class SearchGraph {
 public:
  int num_states() const { return static_cast<int>(state_pdf_.size()); }
  int start() const { return start_; }
  const std::vector<int>& finals() const { return finals_; }
  bool is_final(int state) const { return is_final_[state] != 0; }
  bool is_emitting(int state) const { return state_pdf_[state] != kNoPdf; }
  int pdf(int state) const { return state_pdf_[state]; }

  /// Arcs leaving `state`.
  const GraphArc* arcs_begin(int state) const { return arcs_.data() + arc_start_[state]; }
  const GraphArc* arcs_end(int state) const { return arcs_.data() + arc_start_[state + 1]; }
  std::size_t num_arcs() const { return arcs_.size(); }

  const std::vector<std::string>& words() const { return words_; }
  const std::vector<std::string>& pdf_labels() const { return pdf_labels_; }
  int num_pdfs() const { return static_cast<int>(pdf_labels_.size()); }

  /// History index of a non-emitting state (0 = start), -1 for emitting.
  int history_of(int state) const { return state_history_[state]; }
  const std::vector<std::string>& history_chars() const { return history_chars_; }
  /// LM log probability (natural log) of `word` after history `h`.
  double entry_lm(int h, int word) const {
    return entry_lm_[static_cast<std::size_t>(h) * words_.size() + word];
  }
  const std::vector<std::string>& warnings() const { return warnings_; }

  std::string to_text() const;
  static SearchGraph from_text(std::string_view text);

 private:
  friend SearchGraph build_graph(const PhoneLexicon&, const NGramModel&,
                                 const TransitionParams&);

  std::vector<int> state_pdf_;
  std::vector<int> state_history_;
  std::vector<char> is_final_;
  std::vector<std::size_t> arc_start_;
  std::vector<GraphArc> arcs_;
  int start_ = 0;
  std::vector<int> finals_;
  std::vector<std::string> words_;
  std::vector<std::string> pdf_labels_;
  std::vector<std::string> history_chars_;
  std::vector<double> entry_lm_;
  std::vector<std::string> warnings_;
};

/// pdf labels for a phone set: `<phone label>.<k>` with k in 0..2, in phone
/// label order. Shared by the graph builder and the simulator.
std::vector<std::string> pdf_labels_for(const PhoneLexicon& lex);

SearchGraph build_graph(const PhoneLexicon& lex, const NGramModel& lm,
                        const TransitionParams& transitions = {});

/// Per-frame acoustic log likelihoods indexed by pdf id.
class AcousticScorer {
 public:
  virtual ~AcousticScorer() = default;
  virtual double score(int frame, int pdf) const = 0;
  virtual int num_frames() const = 0;
  virtual int num_labels() const = 0;
  virtual double audio_seconds() const {
    return num_frames() * kFrameShiftSeconds;
  }
};

/// Dense frames x labels matrix of 32-bit scores.
class MatrixScorer : public AcousticScorer {
 public:
  MatrixScorer() = default;
  MatrixScorer(int frames, int labels, std::vector<float> data);

  double score(int frame, int pdf) const override {
    return data_[static_cast<std::size_t>(frame) * labels_ + pdf];
  }
  int num_frames() const override { return frames_; }
  int num_labels() const override { return labels_; }
  double audio_seconds() const override;
  void set_audio_seconds(double s) { audio_seconds_ = s; }
  const std::vector<float>& data() const { return data_; }

  /// Binary layout: "FSCR", u32 frames, u32 labels, row-major float32, all
  /// little-endian.
  void write(const std::filesystem::path& path) const;
  std::string to_bytes() const;
  static MatrixScorer read(const std::filesystem::path& path);
  static MatrixScorer from_bytes(std::string_view bytes);

 private:
  int frames_ = 0;
  int labels_ = 0;
  std::vector<float> data_;
  double audio_seconds_ = -1.0;
};

struct DecodeParams {
  double beam = 15.0;          // natural-log score window
  int max_active = 7000;
  double lm_weight = kDefaultLmWeight;
  int lattice_top_k = 10;      // word-boundary tokens per frame kept as lattice predecessors
  bool build_lattice = true;
  bool keep_state_trace = false;

  static constexpr double kInfiniteBeam = std::numeric_limits<double>::infinity();
  static constexpr int kUnlimitedActive = std::numeric_limits<int>::max();
};

struct DecodeStats {
  int frames = 0;
  std::uint64_t tokens_expanded = 0;
  double active_tokens_mean = 0.0;
  double wall_seconds = 0.0;
  double audio_seconds = 0.0;
  double rtf = 0.0;
  double beam = 0.0;
  int max_active = 0;

  std::string to_json() const;
};

struct DecodeResult {
  Hypothesis hypothesis;
  double score = 0.0;  // total path score incl. lm_weight
  Lattice lattice;
  DecodeStats stats;
  /// Emitting state consumed at each frame (only with keep_state_trace).
  std::vector<int> state_trace;
};

/// Raised when pruning leaves no token in a final state.
class DecodeError : public Error {
 public:
  using Error::Error;
};

DecodeResult decode(const SearchGraph& graph, const AcousticScorer& scorer,
                    const DecodeParams& params = {});

struct BatchItem {
  bool ok = false;
  DecodeResult result;
  std::string error;
};

struct BatchResult {
  std::vector<BatchItem> items;
  double processing_seconds = 0.0;
  double audio_seconds = 0.0;
  double rtf = 0.0;
  std::size_t failures = 0;
};

/// Decodes every utterance independently; failures are recorded per item.
BatchResult batch_decode(const SearchGraph& graph,
                         const std::vector<const AcousticScorer*>& utterances,
                         const DecodeParams& params = {}, int workers = 1);

/// Aggregate real-time factor: total processing time over total audio time.
double aggregate_rtf(const std::vector<double>& processing_seconds,
                     const std::vector<double>& audio_seconds);

}  // namespace yueasr
