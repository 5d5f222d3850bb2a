#pragma once

// Synthetic emission model: isotropic Gaussians per HMM-state label, sampled
// frame by frame to produce per-frame log-likelihood matrices.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "yueasr/decoder.h"
#include "yueasr/phonology.h"

namespace yueasr {

/// Blend phone B's state means toward phone A's with weight p.
struct Confusion {
  std::string a;
  std::string b;
  double p = 0.0;
};

struct SimConfig {
  std::uint64_t seed = 0;
  int min_frames_per_state = 2;
  int max_frames_per_state = 5;
  int feature_dim = 8;
  double noise_sigma = 1.0;  // sampling noise
  double model_sigma = 1.0;  // standard deviation used for scoring
  double mean_spread = 2.0;  // per-coordinate std of the independent means
  std::vector<Confusion> confusion;

  /// Throws Error on out-of-range values.
  void validate() const;
};

/// Applies `key = value` settings (sim keys only) on top of `base`.
/// Recognized keys: seed, frames_per_state (lo..hi or n), feature_dim,
/// noise_sigma, model_sigma, mean_spread, confusion (A:B:p, comma separated).
SimConfig parse_sim_config(std::string_view text, SimConfig base = {});
SimConfig read_sim_config(const std::filesystem::path& path);
std::vector<Confusion> parse_confusions(std::string_view spec);

class StateModel {
 public:
  StateModel() = default;
  StateModel(std::vector<std::string> labels, std::vector<std::vector<double>> means,
             double sigma);

  const std::vector<std::string>& labels() const { return labels_; }
  int index(std::string_view label) const;  // -1 if absent
  const std::vector<double>& mean(int i) const { return means_.at(i); }
  int dim() const { return means_.empty() ? 0 : static_cast<int>(means_[0].size()); }
  double sigma() const { return sigma_; }
  /// Gaussian log density of `x` under label `i`.
  double log_density(int i, const std::vector<double>& x) const;

 private:
  std::vector<std::string> labels_;
  std::map<std::string, int, std::less<>> index_;
  std::vector<std::vector<double>> means_;
  double sigma_ = 1.0;
};

/// Labels are pdf labels (`phone.k`). Means depend only on the seed and the
/// label, then are rejection-sampled to keep pairwise distance
/// >= 4 * noise_sigma. Confusion entries name phones and act on all three
/// states.
StateModel build_state_models(const std::vector<std::string>& labels,
                              const SimConfig& cfg);

/// Returns `models` with each confusion applied in order: the three state
/// means of phone B move to p * mean(A) + (1 - p) * mean(B).
StateModel apply_confusions(const StateModel& models,
                            const std::vector<Confusion>& confusion);

struct SimulatedUtterance {
  MatrixScorer scorer;
  std::vector<int> frame_labels;  // generating label per frame
};

/// Samples durations and frames for `phones` and scores every frame against
/// every label of `models`. `utt_seed` selects the random stream. When
/// `durations` is given (frames per HMM state, 3 per phone) no durations are
/// sampled, so equal seeds give equal noise frame by frame.
SimulatedUtterance simulate_utterance(const PhoneSeq& phones, const StateModel& models,
                                      const SimConfig& cfg, std::uint64_t utt_seed,
                                      const std::vector<int>* durations = nullptr);

/// Stream seed for utterance `index` under run seed `seed`.
std::uint64_t utterance_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace yueasr
