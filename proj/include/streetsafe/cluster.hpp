#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace streetsafe::cluster {

struct FeaturePoint {
  std::string label;
  std::vector<double> features;
};

/// Node ids: leaves are 0..n-1 in input order, merge s creates node n+s.
struct Merge {
  std::size_t left = 0;
  std::size_t right = 0;
  double height = 0.0;
  std::size_t size = 0;
};

struct Dendrogram {
  std::vector<std::string> leaves;
  std::vector<Merge> merges;

  /// Leaf label, or "node<id>" for internal nodes.
  std::string node_name(std::size_t id) const;
};

/// Throws DataError on dimension mismatch.
double euclidean(std::span<const double> x, std::span<const double> y);

/// Agglomerative Ward clustering. Merge height between clusters A and B is
/// sqrt(|A||B|/(|A|+|B|)) * |c_A - c_B|. Equal heights are broken by the
/// lexicographically smallest (min-label, min-label) pair. Labels must be unique.
Dendrogram ward_cluster(std::span<const FeaturePoint> points);

/// Groups joined by merges with height strictly below `threshold`.
/// Cluster ids count up from 0 in leaf order.
std::map<std::string, int> cut_dendrogram(const Dendrogram& dendrogram, double threshold);

/// Thresholds t with low < t <= high give exactly k clusters (for k == n,
/// 0 <= t <= high). high is +inf for k == 1.
struct ThresholdRange {
  double low = 0.0;
  double high = 0.0;
  /// A threshold inside the range, for reporting.
  double pick() const;
};

std::optional<ThresholdRange> threshold_range_for_k(const Dendrogram& dendrogram, std::size_t k);

std::size_t cluster_count(const std::map<std::string, int>& assignment);

}  // namespace streetsafe::cluster
