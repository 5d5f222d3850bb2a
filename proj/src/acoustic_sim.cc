#include "yueasr/acoustic_sim.h"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "yueasr/config.h"
#include "yueasr/error.h"

namespace yueasr {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr int kMaxMeanDraws = 10000;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
  return d;
}

}  // namespace

std::uint64_t utterance_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ index);
}

void SimConfig::validate() const {
  if (min_frames_per_state < 1 || max_frames_per_state < min_frames_per_state) {
    throw Error("frames_per_state must satisfy 1 <= min <= max");
  }
  if (feature_dim < 1) throw Error("feature_dim must be >= 1");
  if (!(noise_sigma >= 0.0)) throw Error("noise_sigma must be >= 0");
  if (!(model_sigma > 0.0)) throw Error("model_sigma must be > 0");
  if (!(mean_spread > 0.0)) throw Error("mean_spread must be > 0");
  for (const Confusion& c : confusion) {
    if (!(c.p >= 0.0 && c.p <= 1.0)) {
      throw Error("confusion probability out of [0,1] for " + c.a + ":" + c.b);
    }
  }
}

std::vector<Confusion> parse_confusions(std::string_view spec) {
  std::vector<Confusion> out;
  std::size_t pos = 0;
  while (pos < spec.size()) {
    auto comma = spec.find(',', pos);
    if (comma == std::string_view::npos) comma = spec.size();
    std::string item(spec.substr(pos, comma - pos));
    pos = comma + 1;
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (item.empty()) continue;
    const auto c1 = item.find(':');
    const auto c2 = c1 == std::string::npos ? c1 : item.find(':', c1 + 1);
    if (c2 == std::string::npos) {
      throw Error("confusion '" + item + "': expected A:B:p");
    }
    Confusion c{item.substr(0, c1), item.substr(c1 + 1, c2 - c1 - 1), 0.0};
    try {
      c.p = std::stod(item.substr(c2 + 1));
    } catch (const std::exception&) {
      throw Error("confusion '" + item + "': bad probability");
    }
    out.push_back(c);
  }
  return out;
}

SimConfig parse_sim_config(std::string_view text, SimConfig base) {
  const KeyValues kv = parse_key_values(text);
  SimConfig c = base;
  c.seed = static_cast<std::uint64_t>(config_int(kv, "seed", static_cast<long long>(c.seed)));
  if (auto it = kv.find("frames_per_state"); it != kv.end()) {
    const std::string& v = it->second.value;
    try {
      if (auto dots = v.find(".."); dots != std::string::npos) {
        c.min_frames_per_state = std::stoi(v.substr(0, dots));
        c.max_frames_per_state = std::stoi(v.substr(dots + 2));
      } else {
        c.min_frames_per_state = c.max_frames_per_state = std::stoi(v);
      }
    } catch (const std::exception&) {
      throw ParseError("frames_per_state: expected n or lo..hi", it->second.line);
    }
  }
  c.feature_dim = static_cast<int>(config_int(kv, "feature_dim", c.feature_dim));
  c.noise_sigma = config_double(kv, "noise_sigma", c.noise_sigma);
  c.model_sigma = config_double(kv, "model_sigma", c.model_sigma);
  c.mean_spread = config_double(kv, "mean_spread", c.mean_spread);
  if (auto it = kv.find("confusion"); it != kv.end()) {
    c.confusion = parse_confusions(it->second.value);
  }
  c.validate();
  return c;
}

SimConfig read_sim_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_sim_config(ss.str());
}

StateModel::StateModel(std::vector<std::string> labels,
                       std::vector<std::vector<double>> means, double sigma)
    : labels_(std::move(labels)), means_(std::move(means)), sigma_(sigma) {
  if (labels_.size() != means_.size()) throw Error("labels and means differ in size");
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (!index_.emplace(labels_[i], static_cast<int>(i)).second) {
      throw Error("duplicate state label " + labels_[i]);
    }
  }
}

int StateModel::index(std::string_view label) const {
  auto it = index_.find(label);
  return it == index_.end() ? -1 : it->second;
}

double StateModel::log_density(int i, const std::vector<double>& x) const {
  const double var = sigma_ * sigma_;
  return -0.5 * static_cast<double>(x.size()) * std::log(2.0 * kPi * var) -
         sq_dist(x, means_.at(i)) / (2.0 * var);
}

StateModel build_state_models(const std::vector<std::string>& labels,
                              const SimConfig& cfg) {
  cfg.validate();
  if (labels.empty()) throw Error("build_state_models: no labels");
  const double min_d2 = 16.0 * cfg.noise_sigma * cfg.noise_sigma;
  std::vector<std::vector<double>> means;
  means.reserve(labels.size());
  for (const std::string& label : labels) {
    std::mt19937_64 rng(splitmix64(cfg.seed ^ fnv1a(label)));
    std::normal_distribution<double> nd(0.0, cfg.mean_spread);
    std::vector<double> m(cfg.feature_dim);
    int draws = 0;
    for (;;) {
      for (double& v : m) v = nd(rng);
      bool ok = true;
      for (const auto& other : means) {
        if (sq_dist(m, other) < min_d2) {
          ok = false;
          break;
        }
      }
      if (ok) break;
      if (++draws >= kMaxMeanDraws) {
        throw Error("cannot place state means at distance 4*noise_sigma; raise mean_spread");
      }
    }
    means.push_back(m);
  }
  return apply_confusions(StateModel(labels, std::move(means), cfg.model_sigma),
                          cfg.confusion);
}

StateModel apply_confusions(const StateModel& models,
                            const std::vector<Confusion>& confusion) {
  std::vector<std::vector<double>> means;
  for (std::size_t i = 0; i < models.labels().size(); ++i) {
    means.push_back(models.mean(static_cast<int>(i)));
  }
  for (const Confusion& c : confusion) {
    if (!(c.p >= 0.0 && c.p <= 1.0)) {
      throw Error("confusion probability out of [0,1] for " + c.a + ":" + c.b);
    }
    for (int k = 0; k < 3; ++k) {
      const int ia = models.index(c.a + "." + std::to_string(k));
      const int ib = models.index(c.b + "." + std::to_string(k));
      if (ia < 0 || ib < 0) {
        throw Error("confusion names unknown label " + (ia < 0 ? c.a : c.b));
      }
      for (std::size_t d = 0; d < means[ib].size(); ++d) {
        means[ib][d] = c.p * means[ia][d] + (1.0 - c.p) * means[ib][d];
      }
    }
  }
  return StateModel(models.labels(), std::move(means), models.sigma());
}

SimulatedUtterance simulate_utterance(const PhoneSeq& phones, const StateModel& models,
                                      const SimConfig& cfg, std::uint64_t utt_seed,
                                      const std::vector<int>* durations) {
  cfg.validate();
  std::vector<int> seq;
  for (const Phone& p : phones) {
    const std::string label = p.label();
    for (int k = 0; k < 3; ++k) {
      const int i = models.index(label + "." + std::to_string(k));
      if (i < 0) throw Error("simulate: unknown phone " + label);
      seq.push_back(i);
    }
  }
  if (seq.empty()) throw Error("simulate: empty phone sequence");
  if (durations) {
    if (durations->size() != seq.size()) {
      throw Error("simulate: expected " + std::to_string(seq.size()) + " state durations, got " +
                  std::to_string(durations->size()));
    }
    for (int d : *durations) {
      if (d < 1) throw Error("simulate: state durations must be >= 1");
    }
  }
  std::mt19937_64 rng(utt_seed);
  std::uniform_int_distribution<int> dur(cfg.min_frames_per_state, cfg.max_frames_per_state);
  std::normal_distribution<double> noise(0.0, 1.0);

  SimulatedUtterance out;
  const int L = static_cast<int>(models.labels().size());
  std::vector<float> data;
  std::vector<double> x(models.dim());
  for (std::size_t j = 0; j < seq.size(); ++j) {
    const int s = seq[j];
    const int n = durations ? (*durations)[j] : dur(rng);
    for (int f = 0; f < n; ++f) {
      const auto& mu = models.mean(s);
      for (int d = 0; d < models.dim(); ++d) x[d] = mu[d] + cfg.noise_sigma * noise(rng);
      for (int l = 0; l < L; ++l) data.push_back(static_cast<float>(models.log_density(l, x)));
      out.frame_labels.push_back(s);
    }
  }
  const int frames = static_cast<int>(out.frame_labels.size());
  out.scorer = MatrixScorer(frames, L, std::move(data));
  return out;
}

}  // namespace yueasr
