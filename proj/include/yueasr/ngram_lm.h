#pragma once

// Back-off n-gram language models over character tokens, stored in log10 as
// in the ARPA format.

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace yueasr {

inline constexpr const char* kSentenceBegin = "<s>";
inline constexpr const char* kSentenceEnd = "</s>";
inline constexpr const char* kUnknown = "<unk>";
/// log10 used for zero probability, the usual ARPA stand-in for -inf.
inline constexpr double kLog10Zero = -99.0;
inline constexpr double kDefaultUnkFloor = 1e-7;

enum class Smoothing { kNone, kWittenBell };

using Sentence = std::vector<std::string>;

class NGramModel {
 public:
  using Key = std::vector<int>;
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept;
  };
  struct Entry {
    double logprob = kLog10Zero;
    double backoff = 0.0;  // log10; 0 when the n-gram is never a context
  };
  using Table = std::unordered_map<Key, Entry, KeyHash>;

  static constexpr int kBos = 0;
  static constexpr int kEos = 1;
  static constexpr int kUnk = 2;

  NGramModel() = default;
  /// Empty model with the three markers plus `tokens` in its vocabulary.
  NGramModel(int order, const std::vector<std::string>& tokens);

  int order() const { return order_; }
  const std::vector<std::string>& vocab() const { return vocab_; }
  std::size_t vocab_size() const { return vocab_.size(); }
  bool contains(std::string_view token) const;
  /// Token id, or kUnk when the token is out of vocabulary.
  int id(std::string_view token) const;
  const std::string& token(int id) const { return vocab_.at(id); }

  /// log10 P(word | history) through the back-off recursion. Only the last
  /// order-1 history ids are used.
  double logprob(std::span<const int> history, int word) const;
  double logprob(const std::vector<std::string>& history,
                 const std::string& word) const;
  double prob(std::span<const int> history, int word) const;

  /// Stored n-grams of length n (1..order).
  const Table& table(int n) const { return tables_.at(n - 1); }
  Table& mutable_table(int n) { return tables_.at(n - 1); }
  std::size_t num_ngrams(int n) const { return tables_.at(n - 1).size(); }

  /// Recomputes back-off weights of every context of length n-1 so that each
  /// conditional distribution sums to one.
  void normalize_backoffs(int n);

 private:
  int order_ = 0;
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, int> ids_;
  std::vector<Table> tables_;
};

NGramModel train_ngram(const std::vector<Sentence>& corpus, int order,
                       Smoothing smoothing);

/// Static linear interpolation re-expressed as a back-off model over the
/// union support: P = lambda * P_a + (1 - lambda) * P_b for stored n-grams.
NGramModel interpolate(const NGramModel& a, const NGramModel& b, double lambda);

/// EM estimate of the mixture weight of `a` on held-out text. Starts at 0.5
/// and stops when the update moves less than 1e-6 or after 100 iterations.
double tune_lambda(const NGramModel& a, const NGramModel& b,
                   const std::vector<Sentence>& heldout,
                   double unk_floor = kDefaultUnkFloor);

/// 10^(-sum(log10 P) / N), N counting tokens plus one end marker per
/// sentence. Out-of-vocabulary tokens score as <unk>, floored at `unk_floor`.
double perplexity(const NGramModel& m, const std::vector<Sentence>& text,
                  double unk_floor = kDefaultUnkFloor);

struct LogProbTotal {
  double log10_sum = 0.0;
  std::size_t tokens = 0;  // including end markers
  std::size_t oovs = 0;
};
LogProbTotal score_text(const NGramModel& m, const std::vector<Sentence>& text,
                        double unk_floor = kDefaultUnkFloor);

NGramModel read_arpa(const std::filesystem::path& path);
NGramModel parse_arpa(std::string_view text);
void write_arpa(const NGramModel& m, const std::filesystem::path& path);
std::string to_arpa(const NGramModel& m);

/// One sentence per non-empty line, tokenized with utf8::char_tokens.
std::vector<Sentence> read_corpus(const std::filesystem::path& path);
std::vector<Sentence> parse_corpus(std::string_view text);

}  // namespace yueasr
