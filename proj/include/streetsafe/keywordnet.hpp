#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "streetsafe/error.hpp"
#include "streetsafe/inference.hpp"

namespace streetsafe::keywordnet {

class EmptyKeywordError : public DataError {
 public:
  using DataError::DataError;
};

/// Lowercasing, punctuation stripping, whitespace collapsing, then a synonym
/// lookup. Canonical forms are themselves clean and never mapped onward, so
/// normalization is idempotent.
class NormalizationRules {
 public:
  /// ASCII punctuation stripped; "vehicle traffic" -> "traffic".
  static NormalizationRules defaults();
  /// Reads `variant,canonical` rows (header line first) on top of defaults().
  static NormalizationRules with_synonyms(std::istream& in);

  /// Throws DataError if the mapping would break idempotence.
  void add_synonym(std::string_view variant, std::string_view canonical);

  std::string clean(std::string_view raw) const;
  const std::map<std::string, std::string>& synonyms() const { return synonyms_; }
  const std::string& strip_chars() const { return strip_; }

 private:
  std::string strip_;
  std::map<std::string, std::string> synonyms_;
};

/// Throws EmptyKeywordError if nothing is left after cleaning.
std::string normalize_keyword(std::string_view raw, const NormalizationRules& rules);

/// Per-image sets of normalized keywords (sorted, deduplicated).
struct KeywordSets {
  std::vector<std::vector<std::string>> images;
  std::size_t dropped_empty = 0;
};

KeywordSets normalized_keyword_sets(std::span<const inference::Assessment> assessments, const NormalizationRules& rules);

/// Assessments with the given classification, optionally for one persona.
std::vector<inference::Assessment> filter_assessments(std::span<const inference::Assessment> assessments,
                                                      Label classification,
                                                      const std::optional<std::string>& persona_id = std::nullopt);

struct TopKeywords {
  std::vector<std::string> keywords;  // most frequent first
  std::map<std::string, std::size_t> frequency;
  bool short_set = false;  // fewer than n distinct keywords existed
};

/// Frequency = number of images mentioning the keyword; ties broken lexicographically.
TopKeywords top_n_keywords(const KeywordSets& sets, std::size_t n);

struct KeywordGraph {
  std::vector<std::string> nodes;
  std::vector<std::uint32_t> weights;  // row-major, symmetric, zero diagonal

  std::size_t size() const { return nodes.size(); }
  std::uint32_t weight(std::size_t m, std::size_t n) const { return weights[m * nodes.size() + n]; }
  std::size_t edge_count() const;
  /// Half the sum of all ordered-pair weights.
  double total_weight() const;
  double degree(std::size_t m) const;

  static KeywordGraph from_edges(std::vector<std::string> nodes,
                                 std::span<const std::tuple<std::size_t, std::size_t, std::uint32_t>> edges);
};

/// A_mn = number of images whose top-N keyword subset holds both keywords.
KeywordGraph cooccurrence_graph(const KeywordSets& sets, std::span<const std::string> top);

struct Partition {
  std::vector<int> community;  // per node, renumbered 0.. in node order
  double modularity = 0.0;

  std::size_t community_count() const;
};

/// Q = (1/2W) * sum over ordered edge pairs (m,n) in E of [w_mn - d_m d_n / 2W] * delta(m,n).
/// Throws DataError for an edgeless graph.
double modularity(const KeywordGraph& graph, std::span<const int> community);

/// The Newman-Girvan form summing over all ordered node pairs, self pairs included.
double newman_modularity(const KeywordGraph& graph, std::span<const int> community);

/// Two-phase Louvain (local moves, then aggregation) maximizing modularity().
/// Node visit order is a seeded shuffle; the result is deterministic in (graph, seed).
Partition louvain(const KeywordGraph& graph, std::uint64_t seed);

struct CentralityScore {
  std::string node;
  int community = 0;
  double value = 0.0;
};

/// Distinct within-community neighbours over |C|-1; 0 for singleton communities.
/// Rows follow node order.
std::vector<CentralityScore> community_degree_centrality(const KeywordGraph& graph, const Partition& partition);

/// `keyword,community,degree_centrality`, grouped by community, highest centrality first.
void write_node_table(std::ostream& out, const std::vector<CentralityScore>& scores);
/// `source,target,weight` for every positive pair, m < n.
void write_edge_table(std::ostream& out, const KeywordGraph& graph);

}  // namespace streetsafe::keywordnet
