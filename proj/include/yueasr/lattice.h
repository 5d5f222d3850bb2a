#pragma once

// Word lattices: acyclic graphs of competing word hypotheses with separate
// acoustic and language-model scores (natural log).

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "yueasr/ngram_lm.h"

namespace yueasr {

inline constexpr double kDefaultLmWeight = 10.0;
inline constexpr int kDefaultNBest = 200;
inline constexpr const char* kEpsilon = "-";

struct LatticeArc {
  int from = 0;
  int to = 0;
  std::string word;  // kEpsilon for no word
  double am_score = 0.0;
  double lm_score = 0.0;

  bool is_epsilon() const { return word == kEpsilon; }
  bool operator==(const LatticeArc&) const = default;
};

class Lattice {
 public:
  /// Node ids are 0..num_nodes()-1.
  int add_node(int frame);
  void add_arc(LatticeArc arc);
  void set_start(int node) { start_ = node; }
  void add_final(int node);

  int num_nodes() const { return static_cast<int>(frames_.size()); }
  int frame(int node) const { return frames_.at(node); }
  int start() const { return start_; }
  const std::vector<int>& finals() const { return finals_; }
  bool is_final(int node) const;
  const std::vector<LatticeArc>& arcs() const { return arcs_; }
  /// Arc indices leaving each node, in insertion order.
  const std::vector<std::vector<int>>& out_arcs() const { return out_; }

  /// Checks acyclicity, reachability from start, co-reachability to a final
  /// and the absence of self-loops. Throws Error on violation.
  void validate() const;
  /// Nodes in a topological order (ascending id among ready nodes).
  std::vector<int> topological_order() const;

  bool operator==(const Lattice&) const = default;

 private:
  std::vector<int> frames_;
  std::vector<LatticeArc> arcs_;
  std::vector<std::vector<int>> out_;
  int start_ = 0;
  std::vector<int> finals_;
};

struct Hypothesis {
  std::vector<std::string> words;  // epsilons removed
  std::vector<int> nodes;          // node path through the lattice, if any
  double am_total = 0.0;
  double lm_total = 0.0;
  double lm_weight = kDefaultLmWeight;

  double combined() const { return am_total + lm_weight * lm_total; }
  std::string text(std::string_view sep = "") const;
};

/// Highest combined-score start-to-final path; ties go to the
/// lexicographically smallest node sequence.
Hypothesis best_path(const Lattice& lat, double lm_weight = kDefaultLmWeight);

/// The n best distinct word sequences, best first.
std::vector<Hypothesis> nbest(const Lattice& lat, int n = kDefaultNBest,
                              double lm_weight = kDefaultLmWeight);

/// Replaces every arc's LM score with the conditional log probability under
/// `lm` given the full in-lattice word history (starting at <s>), splitting
/// nodes so each one has a unique (order-1)-word history. Sentence-end
/// probability is not added, matching the decoder.
Lattice rescore_ngram(const Lattice& lat, const NGramModel& lm);

/// lm_total := interpolation * old + (1 - interpolation) * external, then
/// re-sorts by combined score (stable). `scores` is keyed by the
/// space-joined word sequence.
std::vector<Hypothesis> rescore_external(std::vector<Hypothesis> hyps,
                                         const std::map<std::string, double>& scores,
                                         double interpolation);

/// All complete word sequences (space-joined) reachable in the lattice.
/// Exponential; intended for small lattices.
std::vector<std::string> enumerate_word_sequences(const Lattice& lat);

Lattice read_lattice(const std::filesystem::path& path);
Lattice parse_lattice(std::string_view text);
void write_lattice(const Lattice& lat, const std::filesystem::path& path);
std::string to_text(const Lattice& lat);

}  // namespace yueasr
