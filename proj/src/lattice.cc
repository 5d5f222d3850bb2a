#include "yueasr/lattice.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <queue>
#include <set>
#include <sstream>

#include "yueasr/error.h"
#include "yueasr/utf8.h"

namespace yueasr {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::string join(const std::vector<std::string>& words, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += sep;
    out += words[i];
  }
  return out;
}

// Best completion score from every node to any final, with the successor
// choice that realizes it (-1 = stop here, otherwise an arc index).
struct Completion {
  std::vector<double> score;
  std::vector<int> choice;
};

Completion best_completions(const Lattice& lat, double lm_weight) {
  const auto order = lat.topological_order();
  Completion c{std::vector<double>(lat.num_nodes(), kNegInf),
               std::vector<int>(lat.num_nodes(), -1)};
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const int v = *it;
    double best = lat.is_final(v) ? 0.0 : kNegInf;
    int choice = -1;
    int best_to = -1;
    for (int ai : lat.out_arcs()[v]) {
      const auto& arc = lat.arcs()[ai];
      if (c.score[arc.to] == kNegInf) continue;
      const double s = arc.am_score + lm_weight * arc.lm_score + c.score[arc.to];
      // Stopping is a prefix of any continuation, so it wins ties; among
      // continuations the smaller next node wins.
      const bool better = s > best || (s == best && choice != -1 && best_to != -1 &&
                                       arc.to < best_to);
      if (better) {
        best = s;
        choice = ai;
        best_to = arc.to;
      }
    }
    c.score[v] = best;
    c.choice[v] = choice;
  }
  return c;
}

Hypothesis make_hypothesis(const Lattice& lat, const std::vector<int>& arc_path,
                           double lm_weight) {
  Hypothesis h;
  h.lm_weight = lm_weight;
  h.nodes.push_back(lat.start());
  for (int ai : arc_path) {
    const auto& arc = lat.arcs()[ai];
    if (!arc.is_epsilon()) h.words.push_back(arc.word);
    h.am_total += arc.am_score;
    h.lm_total += arc.lm_score;
    h.nodes.push_back(arc.to);
  }
  return h;
}

std::vector<int> parse_ints(std::istringstream& is, int n, std::size_t line_no) {
  std::vector<int> out(n);
  for (auto& v : out) {
    if (!(is >> v)) throw ParseError("expected integer field", line_no);
  }
  return out;
}

}  // namespace

int Lattice::add_node(int frame) {
  frames_.push_back(frame);
  out_.emplace_back();
  return num_nodes() - 1;
}

void Lattice::add_arc(LatticeArc arc) {
  if (arc.from < 0 || arc.from >= num_nodes() || arc.to < 0 || arc.to >= num_nodes())
    throw Error("lattice arc references an unknown node");
  out_[arc.from].push_back(static_cast<int>(arcs_.size()));
  arcs_.push_back(std::move(arc));
}

void Lattice::add_final(int node) {
  if (node < 0 || node >= num_nodes()) throw Error("final node out of range");
  if (!is_final(node)) finals_.push_back(node);
}

bool Lattice::is_final(int node) const {
  return std::find(finals_.begin(), finals_.end(), node) != finals_.end();
}

std::vector<int> Lattice::topological_order() const {
  std::vector<int> indegree(num_nodes(), 0);
  for (const auto& a : arcs_) ++indegree[a.to];
  std::priority_queue<int, std::vector<int>, std::greater<>> ready;
  for (int v = 0; v < num_nodes(); ++v) {
    if (indegree[v] == 0) ready.push(v);
  }
  std::vector<int> order;
  order.reserve(num_nodes());
  while (!ready.empty()) {
    const int v = ready.top();
    ready.pop();
    order.push_back(v);
    for (int ai : out_[v]) {
      if (--indegree[arcs_[ai].to] == 0) ready.push(arcs_[ai].to);
    }
  }
  if (static_cast<int>(order.size()) != num_nodes()) throw Error("lattice has a cycle");
  return order;
}

void Lattice::validate() const {
  if (num_nodes() == 0) throw Error("lattice has no nodes");
  if (start_ < 0 || start_ >= num_nodes()) throw Error("lattice start out of range");
  if (finals_.empty()) throw Error("lattice has no final node");
  for (const auto& a : arcs_) {
    if (a.from == a.to) throw Error("lattice arc is a self-loop");
  }
  const auto order = topological_order();
  std::vector<char> fwd(num_nodes(), 0), bwd(num_nodes(), 0);
  fwd[start_] = 1;
  for (int v : order) {
    if (!fwd[v]) continue;
    for (int ai : out_[v]) fwd[arcs_[ai].to] = 1;
  }
  for (int f : finals_) bwd[f] = 1;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    for (int ai : out_[*it]) {
      if (bwd[arcs_[ai].to]) bwd[*it] = 1;
    }
  }
  for (int v = 0; v < num_nodes(); ++v) {
    if (!fwd[v]) throw Error("lattice node " + std::to_string(v) + " unreachable from start");
    if (!bwd[v]) throw Error("lattice node " + std::to_string(v) + " cannot reach a final");
  }
}

std::string Hypothesis::text(std::string_view sep) const { return join(words, sep); }

Hypothesis best_path(const Lattice& lat, double lm_weight) {
  const auto c = best_completions(lat, lm_weight);
  if (c.score[lat.start()] == kNegInf) throw Error("lattice has no complete path");
  std::vector<int> path;
  for (int v = lat.start(); c.choice[v] != -1; v = lat.arcs()[c.choice[v]].to)
    path.push_back(c.choice[v]);
  return make_hypothesis(lat, path, lm_weight);
}

std::vector<Hypothesis> nbest(const Lattice& lat, int n, double lm_weight) {
  if (n < 1) throw Error("n-best size must be >= 1");
  const auto c = best_completions(lat, lm_weight);
  if (c.score[lat.start()] == kNegInf) return {};

  // Best-first search with the exact completion score as heuristic: complete
  // paths pop in descending score order.
  struct Item {
    int node;
    double g;
    int parent;  // index into items, -1 for the root
    int arc;     // arc taken from parent
    bool ended;
  };
  std::vector<Item> items;
  auto node_path = [&](int idx) {
    std::vector<int> nodes;
    for (; idx != -1; idx = items[idx].parent) nodes.push_back(items[idx].node);
    std::reverse(nodes.begin(), nodes.end());
    return nodes;
  };
  auto priority = [&](int idx) {
    const auto& it = items[idx];
    return it.ended ? it.g : it.g + c.score[it.node];
  };
  auto worse = [&](int a, int b) {
    const double pa = priority(a), pb = priority(b);
    if (pa != pb) return pa < pb;
    const auto na = node_path(a), nb = node_path(b);
    if (na != nb) return nb < na;
    return items[a].ended < items[b].ended;
  };
  std::priority_queue<int, std::vector<int>, decltype(worse)> heap(worse);

  items.push_back({lat.start(), 0.0, -1, -1, false});
  heap.push(0);
  std::vector<Hypothesis> out;
  std::set<std::vector<std::string>> seen;
  constexpr std::size_t kMaxExpansions = 2'000'000;
  std::size_t expansions = 0;
  while (!heap.empty() && static_cast<int>(out.size()) < n && expansions < kMaxExpansions) {
    const int idx = heap.top();
    heap.pop();
    ++expansions;
    const Item cur = items[idx];
    if (cur.ended) {
      std::vector<int> arcs;
      for (int i = idx; items[i].parent != -1; i = items[i].parent) {
        if (items[i].arc >= 0) arcs.push_back(items[i].arc);
      }
      std::reverse(arcs.begin(), arcs.end());
      auto hyp = make_hypothesis(lat, arcs, lm_weight);
      if (seen.insert(hyp.words).second) out.push_back(std::move(hyp));
      continue;
    }
    if (lat.is_final(cur.node)) {
      items.push_back({cur.node, cur.g, idx, -1, true});
      heap.push(static_cast<int>(items.size()) - 1);
    }
    for (int ai : lat.out_arcs()[cur.node]) {
      const auto& arc = lat.arcs()[ai];
      if (c.score[arc.to] == kNegInf) continue;
      items.push_back(
          {arc.to, cur.g + arc.am_score + lm_weight * arc.lm_score, idx, ai, false});
      heap.push(static_cast<int>(items.size()) - 1);
    }
  }
  return out;
}

Lattice rescore_ngram(const Lattice& lat, const NGramModel& lm) {
  if (lm.order() < 2) throw Error("rescoring needs an n-gram model of order >= 2");
  const std::size_t ctx_len = static_cast<std::size_t>(lm.order() - 1);
  const auto order = lat.topological_order();

  using State = std::pair<int, std::vector<int>>;
  std::map<State, int> ids;
  std::vector<std::vector<std::pair<std::vector<int>, int>>> states_of(lat.num_nodes());
  Lattice out;
  auto state_id = [&](int node, const std::vector<int>& hist) {
    auto [it, fresh] = ids.emplace(State{node, hist}, 0);
    if (fresh) {
      it->second = out.add_node(lat.frame(node));
      states_of[node].emplace_back(hist, it->second);
      if (lat.is_final(node)) out.add_final(it->second);
    }
    return it->second;
  };
  out.set_start(state_id(lat.start(), {NGramModel::kBos}));

  for (int v : order) {
    // states_of[v] only grows while predecessors are processed, which all
    // precede v in topological order.
    const auto states = states_of[v];
    for (const auto& [hist, from] : states) {
      for (int ai : lat.out_arcs()[v]) {
        const auto& arc = lat.arcs()[ai];
        std::vector<int> h = hist;
        double lm_score = 0.0;
        if (!arc.is_epsilon()) {
          for (const auto& tok : utf8::char_tokens(arc.word)) {
            const int w = lm.id(tok);
            lm_score += lm.logprob(h, w) * std::numbers::ln10;
            h.push_back(w);
            if (h.size() > ctx_len) h.erase(h.begin(), h.end() - ctx_len);
          }
        }
        const int to = state_id(arc.to, h);
        out.add_arc({from, to, arc.word, arc.am_score, lm_score});
      }
    }
  }
  return out;
}

std::vector<Hypothesis> rescore_external(std::vector<Hypothesis> hyps,
                                         const std::map<std::string, double>& scores,
                                         double interpolation) {
  if (!(interpolation >= 0.0 && interpolation <= 1.0))
    throw Error("interpolation must be in [0, 1]");
  std::vector<std::string> missing;
  for (const auto& h : hyps) {
    if (!scores.count(h.text(" "))) missing.push_back(h.text(" "));
  }
  if (!missing.empty()) {
    std::string msg = "missing external scores for:";
    for (const auto& m : missing) msg += " [" + m + "]";
    throw Error(msg);
  }
  for (auto& h : hyps) {
    h.lm_total = interpolation * h.lm_total +
                 (1.0 - interpolation) * scores.at(h.text(" "));
  }
  std::stable_sort(hyps.begin(), hyps.end(), [](const Hypothesis& a, const Hypothesis& b) {
    return a.combined() > b.combined();
  });
  return hyps;
}

std::vector<std::string> enumerate_word_sequences(const Lattice& lat) {
  std::set<std::string> out;
  std::vector<std::string> words;
  auto dfs = [&](auto&& self, int v) -> void {
    if (lat.is_final(v)) out.insert(join(words, " "));
    for (int ai : lat.out_arcs()[v]) {
      const auto& arc = lat.arcs()[ai];
      if (!arc.is_epsilon()) words.push_back(arc.word);
      self(self, arc.to);
      if (!arc.is_epsilon()) words.pop_back();
    }
  };
  dfs(dfs, lat.start());
  return {out.begin(), out.end()};
}

std::string to_text(const Lattice& lat) {
  std::string out = "LATTICE v1\n";
  for (int v = 0; v < lat.num_nodes(); ++v)
    out += "node " + std::to_string(v) + " " + std::to_string(lat.frame(v)) + "\n";
  out += "start " + std::to_string(lat.start()) + "\n";
  for (int f : lat.finals()) out += "final " + std::to_string(f) + "\n";
  char buf[96];
  for (const auto& a : lat.arcs()) {
    std::snprintf(buf, sizeof buf, " %.6f %.6f\n", a.am_score, a.lm_score);
    out += "arc " + std::to_string(a.from) + " " + std::to_string(a.to) + " " + a.word + buf;
  }
  return out;
}

void write_lattice(const Lattice& lat, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << to_text(lat);
  if (!out) throw Error("write failed for " + path.string());
}

Lattice parse_lattice(std::string_view text) {
  std::istringstream is{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  Lattice lat;
  bool header = false, have_start = false;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != "LATTICE v1") throw ParseError("expected 'LATTICE v1' header", line_no);
      header = true;
      continue;
    }
    std::istringstream fields(line);
    std::string kind;
    fields >> kind;
    if (kind == "node") {
      const auto v = parse_ints(fields, 2, line_no);
      if (v[0] != lat.num_nodes())
        throw ParseError("node ids must be declared in order from 0", line_no);
      lat.add_node(v[1]);
    } else if (kind == "start" || kind == "final") {
      const int v = parse_ints(fields, 1, line_no)[0];
      if (v < 0 || v >= lat.num_nodes())
        throw ParseError(kind + " references undeclared node " + std::to_string(v), line_no);
      if (kind == "start") {
        lat.set_start(v);
        have_start = true;
      } else {
        lat.add_final(v);
      }
    } else if (kind == "arc") {
      LatticeArc arc;
      std::string am, lm;
      if (!(fields >> arc.from >> arc.to >> arc.word >> am >> lm))
        throw ParseError("arc needs: from to word am lm", line_no);
      if (arc.from < 0 || arc.from >= lat.num_nodes() || arc.to < 0 ||
          arc.to >= lat.num_nodes())
        throw ParseError("arc references undeclared node", line_no);
      try {
        arc.am_score = std::stod(am);
        arc.lm_score = std::stod(lm);
      } catch (const std::exception&) {
        throw ParseError("bad arc score", line_no);
      }
      lat.add_arc(std::move(arc));
    } else {
      throw ParseError("unknown lattice record '" + kind + "'", line_no);
    }
    std::string extra;
    if (fields >> extra) throw ParseError("trailing fields", line_no);
  }
  if (!header) throw ParseError("empty lattice file", line_no);
  if (!have_start) throw ParseError("lattice has no start line", line_no);
  lat.validate();
  return lat;
}

Lattice read_lattice(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_lattice(buf.str());
}

}  // namespace yueasr
