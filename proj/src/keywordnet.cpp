#include "streetsafe/keywordnet.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <tuple>

#include "streetsafe/kernels.hpp"
#include "streetsafe/util.hpp"

namespace streetsafe::keywordnet {

NormalizationRules NormalizationRules::defaults() {
  NormalizationRules r;
  r.strip_ = "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~";
  r.add_synonym("vehicle traffic", "traffic");
  return r;
}

NormalizationRules NormalizationRules::with_synonyms(std::istream& in) {
  NormalizationRules r = defaults();
  std::string line;
  bool header = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (util::trim(line).empty() || util::trim(line).starts_with('#')) continue;
    if (header) {
      header = false;
      continue;
    }
    auto f = util::split_csv_line(line);
    if (f.size() != 2) throw DataError(fmt::format("synonyms line {}: expected `variant,canonical`", line_no));
    r.add_synonym(f[0], f[1]);
  }
  return r;
}

void NormalizationRules::add_synonym(std::string_view variant, std::string_view canonical) {
  std::string v = clean(variant);
  std::string c = clean(canonical);
  if (v.empty() || c.empty()) throw DataError("synonym entries must be non-empty after cleaning");
  if (v == c) return;
  if (auto it = synonyms_.find(c); it != synonyms_.end()) {
    throw DataError(fmt::format("canonical `{}` is itself mapped to `{}`", c, it->second));
  }
  for (const auto& [from, to] : synonyms_) {
    if (to == v) throw DataError(fmt::format("`{}` is already the canonical form of `{}`", v, from));
  }
  if (auto it = synonyms_.find(v); it != synonyms_.end() && it->second != c) {
    throw DataError(fmt::format("`{}` already maps to `{}`", v, it->second));
  }
  synonyms_[v] = c;
}

std::string NormalizationRules::clean(std::string_view raw) const {
  std::string out;
  bool pending_space = false;
  for (char ch : raw) {
    if (strip_.find(ch) != std::string::npos) continue;
    if (ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r' || ch == '\f' || ch == '\v') {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(ch >= 'A' && ch <= 'Z' ? static_cast<char>(ch - 'A' + 'a') : ch);
  }
  return out;
}

std::string normalize_keyword(std::string_view raw, const NormalizationRules& rules) {
  std::string c = rules.clean(raw);
  if (c.empty()) throw EmptyKeywordError(fmt::format("keyword `{}` is empty after normalization", raw));
  auto it = rules.synonyms().find(c);
  return it == rules.synonyms().end() ? c : it->second;
}

KeywordSets normalized_keyword_sets(std::span<const inference::Assessment> assessments, const NormalizationRules& rules) {
  KeywordSets out;
  out.images.reserve(assessments.size());
  for (const auto& a : assessments) {
    std::set<std::string> s;
    for (const auto& k : a.keywords) {
      try {
        s.insert(normalize_keyword(k, rules));
      } catch (const EmptyKeywordError&) {
        ++out.dropped_empty;
      }
    }
    out.images.emplace_back(s.begin(), s.end());
  }
  return out;
}

std::vector<inference::Assessment> filter_assessments(std::span<const inference::Assessment> assessments,
                                                      Label classification,
                                                      const std::optional<std::string>& persona_id) {
  std::vector<inference::Assessment> out;
  for (const auto& a : assessments) {
    if (a.classification != classification) continue;
    if (persona_id && a.persona_id != *persona_id) continue;
    out.push_back(a);
  }
  return out;
}

TopKeywords top_n_keywords(const KeywordSets& sets, std::size_t n) {
  if (n == 0) throw UsageError("top-n must be at least 1");
  if (sets.images.empty()) throw DataError("top-n: no assessments to draw keywords from");
  TopKeywords top;
  for (const auto& img : sets.images) {
    for (const auto& k : img) ++top.frequency[k];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(top.frequency.begin(), top.frequency.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  top.short_set = ranked.size() < n;
  for (std::size_t i = 0; i < std::min(n, ranked.size()); ++i) top.keywords.push_back(ranked[i].first);
  return top;
}

std::size_t KeywordGraph::edge_count() const {
  std::size_t e = 0;
  for (std::size_t m = 0; m < size(); ++m) {
    for (std::size_t n = m + 1; n < size(); ++n) e += weight(m, n) > 0 ? 1 : 0;
  }
  return e;
}

double KeywordGraph::total_weight() const {
  double s = 0.0;
  for (auto w : weights) s += w;
  return s / 2.0;
}

double KeywordGraph::degree(std::size_t m) const {
  double d = 0.0;
  for (std::size_t n = 0; n < size(); ++n) d += weight(m, n);
  return d;
}

KeywordGraph KeywordGraph::from_edges(std::vector<std::string> nodes,
                                      std::span<const std::tuple<std::size_t, std::size_t, std::uint32_t>> edges) {
  KeywordGraph g;
  g.nodes = std::move(nodes);
  const std::size_t n = g.nodes.size();
  g.weights.assign(n * n, 0);
  for (const auto& [a, b, w] : edges) {
    if (a >= n || b >= n || a == b) throw DataError("edge endpoints must be distinct valid nodes");
    g.weights[a * n + b] = w;
    g.weights[b * n + a] = w;
  }
  return g;
}

KeywordGraph cooccurrence_graph(const KeywordSets& sets, std::span<const std::string> top) {
  std::map<std::string_view, std::uint32_t> index;
  for (std::size_t i = 0; i < top.size(); ++i) index.emplace(top[i], static_cast<std::uint32_t>(i));
  kernels::IndexSets idx;
  idx.reserve(sets.images.size());
  for (const auto& img : sets.images) {
    std::vector<std::uint32_t> s;
    for (const auto& k : img) {
      if (auto it = index.find(k); it != index.end()) s.push_back(it->second);
    }
    idx.push_back(std::move(s));
  }
  KeywordGraph g;
  g.nodes.assign(top.begin(), top.end());
  g.weights = kernels::omp::cooccurrence(idx, top.size());
  return g;
}

std::size_t Partition::community_count() const {
  return std::set<int>(community.begin(), community.end()).size();
}

namespace {

void check_partition(const KeywordGraph& graph, std::span<const int> community) {
  if (community.size() != graph.size()) {
    throw DataError(fmt::format("partition covers {} nodes, graph has {}", community.size(), graph.size()));
  }
}

}  // namespace

double modularity(const KeywordGraph& graph, std::span<const int> community) {
  check_partition(graph, community);
  const double two_w = 2.0 * graph.total_weight();
  if (two_w == 0.0) throw DataError("modularity is undefined for a graph without edges");
  std::vector<double> deg(graph.size());
  for (std::size_t m = 0; m < graph.size(); ++m) deg[m] = graph.degree(m);
  double q = 0.0;
  for (std::size_t m = 0; m < graph.size(); ++m) {
    for (std::size_t n = 0; n < graph.size(); ++n) {
      double w = graph.weight(m, n);
      if (w > 0 && community[m] == community[n]) q += w - deg[m] * deg[n] / two_w;
    }
  }
  return q / two_w;
}

double newman_modularity(const KeywordGraph& graph, std::span<const int> community) {
  check_partition(graph, community);
  const double two_w = 2.0 * graph.total_weight();
  if (two_w == 0.0) throw DataError("modularity is undefined for a graph without edges");
  std::vector<double> deg(graph.size());
  for (std::size_t m = 0; m < graph.size(); ++m) deg[m] = graph.degree(m);
  double q = 0.0;
  for (std::size_t m = 0; m < graph.size(); ++m) {
    for (std::size_t n = 0; n < graph.size(); ++n) {
      if (community[m] == community[n]) q += graph.weight(m, n) - deg[m] * deg[n] / two_w;
    }
  }
  return q / two_w;
}

namespace {

// Aggregated level: pairwise gains between super-nodes. Only pairs joined by
// at least one original edge carry a gain, so this is a sparse adjacency.
struct Level {
  std::vector<std::vector<std::pair<std::size_t, double>>> adj;
};

std::vector<std::size_t> seeded_order(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
  return order;
}

// Local-move phase. Returns the community of each level node and whether anything moved.
std::pair<std::vector<std::size_t>, bool> local_moves(const Level& level, std::mt19937_64& rng, double eps) {
  const std::size_t n = level.adj.size();
  std::vector<std::size_t> comm(n);
  std::vector<std::size_t> members(n, 1);
  for (std::size_t i = 0; i < n; ++i) comm[i] = i;
  std::vector<std::size_t> free_ids;

  bool any_move = false;
  std::map<std::size_t, double> link;  // community -> summed gain to the node
  for (int pass = 0; pass < 1000; ++pass) {
    bool moved = false;
    for (std::size_t i : seeded_order(n, rng)) {
      const std::size_t home = comm[i];
      link.clear();
      for (const auto& [j, g] : level.adj[i]) {
        if (j != i) link[comm[j]] += g;
      }
      const double stay = link.contains(home) ? link.at(home) : 0.0;

      // Candidates: neighbouring communities, plus a fresh singleton (gain 0).
      double best_gain = stay;
      std::optional<std::size_t> best;
      for (const auto& [c, g] : link) {
        if (c != home && g > best_gain + eps) {
          best_gain = g;
          best = c;
        }
      }
      bool isolate = false;
      if (members[home] > 1 && 0.0 > best_gain + eps) {
        isolate = true;
        best.reset();
      }
      if (!best && !isolate) continue;

      std::size_t target;
      if (isolate) {
        target = free_ids.back();
        free_ids.pop_back();
      } else {
        target = *best;
      }
      if (--members[home] == 0) free_ids.push_back(home);
      ++members[target];
      comm[i] = target;
      moved = any_move = true;
    }
    if (!moved) break;
  }
  return {comm, any_move};
}

}  // namespace

Partition louvain(const KeywordGraph& graph, std::uint64_t seed) {
  const std::size_t n = graph.size();
  const double two_w = 2.0 * graph.total_weight();
  if (two_w == 0.0) throw DataError("louvain needs a graph with at least one edge");

  std::vector<double> deg(n);
  for (std::size_t m = 0; m < n; ++m) deg[m] = graph.degree(m);
  Level level;
  level.adj.resize(n);
  double max_gain = 0.0;
  for (std::size_t m = 0; m < n; ++m) {
    for (std::size_t k = 0; k < n; ++k) {
      double w = graph.weight(m, k);
      if (k == m || w <= 0) continue;
      double g = w - deg[m] * deg[k] / two_w;
      level.adj[m].emplace_back(k, g);
      max_gain = std::max(max_gain, std::abs(g));
    }
  }
  const double eps = 1e-12 * std::max(max_gain, 1e-300);

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> node_comm(n);  // original node -> current level node
  for (std::size_t i = 0; i < n; ++i) node_comm[i] = i;

  while (true) {
    auto [comm, moved] = local_moves(level, rng, eps);
    if (!moved) break;
    // Renumber communities by first appearance in level-node order.
    std::map<std::size_t, std::size_t> renumber;
    for (std::size_t c : comm) renumber.try_emplace(c, renumber.size());
    if (renumber.size() == comm.size()) break;  // moves cancelled out; nothing to aggregate
    for (auto& c : node_comm) c = renumber.at(comm[c]);

    Level next;
    next.adj.resize(renumber.size());
    std::vector<std::map<std::size_t, double>> acc(renumber.size());
    for (std::size_t i = 0; i < level.adj.size(); ++i) {
      std::size_t ci = renumber.at(comm[i]);
      for (const auto& [j, g] : level.adj[i]) {
        std::size_t cj = renumber.at(comm[j]);
        if (ci != cj) acc[ci][cj] += g;
      }
    }
    for (std::size_t c = 0; c < acc.size(); ++c) next.adj[c].assign(acc[c].begin(), acc[c].end());
    level = std::move(next);
  }

  Partition p;
  std::map<std::size_t, int> relabel;
  for (std::size_t i = 0; i < n; ++i) {
    auto [it, ins] = relabel.try_emplace(node_comm[i], static_cast<int>(relabel.size()));
    p.community.push_back(it->second);
  }
  p.modularity = modularity(graph, p.community);
  return p;
}

std::vector<CentralityScore> community_degree_centrality(const KeywordGraph& graph, const Partition& partition) {
  check_partition(graph, partition.community);
  std::map<int, std::size_t> sizes;
  for (int c : partition.community) ++sizes[c];
  std::vector<CentralityScore> out;
  for (std::size_t v = 0; v < graph.size(); ++v) {
    const int c = partition.community[v];
    std::size_t within = 0;
    for (std::size_t u = 0; u < graph.size(); ++u) {
      if (u != v && partition.community[u] == c && graph.weight(v, u) > 0) ++within;
    }
    const std::size_t size = sizes.at(c);
    double value = size < 2 ? 0.0 : static_cast<double>(within) / static_cast<double>(size - 1);
    out.push_back(CentralityScore{graph.nodes[v], c, value});
  }
  return out;
}

void write_node_table(std::ostream& out, const std::vector<CentralityScore>& scores) {
  std::vector<CentralityScore> sorted = scores;
  std::stable_sort(sorted.begin(), sorted.end(), [](const CentralityScore& a, const CentralityScore& b) {
    return std::tie(a.community, b.value, a.node) < std::tie(b.community, a.value, b.node);
  });
  out << "keyword,community,degree_centrality\n";
  for (const auto& s : sorted) {
    out << util::csv_escape(s.node) << ',' << s.community << ',' << util::fixed(s.value, 4) << '\n';
  }
}

void write_edge_table(std::ostream& out, const KeywordGraph& graph) {
  out << "source,target,weight\n";
  for (std::size_t m = 0; m < graph.size(); ++m) {
    for (std::size_t n = m + 1; n < graph.size(); ++n) {
      if (auto w = graph.weight(m, n); w > 0) {
        out << util::csv_escape(graph.nodes[m]) << ',' << util::csv_escape(graph.nodes[n]) << ',' << w << '\n';
      }
    }
  }
}

}  // namespace streetsafe::keywordnet
