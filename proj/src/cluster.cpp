#include "streetsafe/cluster.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "streetsafe/error.hpp"
#include "streetsafe/kernels.hpp"

namespace streetsafe::cluster {

std::string Dendrogram::node_name(std::size_t id) const {
  return id < leaves.size() ? leaves[id] : fmt::format("node{}", id);
}

double euclidean(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DataError(fmt::format("euclidean: dimensions {} and {} differ", x.size(), y.size()));
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
  return std::sqrt(s);
}

Dendrogram ward_cluster(std::span<const FeaturePoint> points) {
  const std::size_t n = points.size();
  if (n < 2) throw DataError("ward: at least two points are required");
  const std::size_t dim = points.front().features.size();
  std::set<std::string> labels;
  std::vector<double> flat;
  flat.reserve(n * dim);
  for (const auto& p : points) {
    if (p.features.size() != dim) throw DataError("ward: `" + p.label + "` has a different feature dimension");
    for (double v : p.features) {
      if (!std::isfinite(v)) throw DataError("ward: non-finite feature for `" + p.label + "`");
      flat.push_back(v);
    }
    if (!labels.insert(p.label).second) throw DataError("ward: duplicate label `" + p.label + "`");
  }

  // cost(A,B) = |A||B|/(|A|+|B|) * |c_A - c_B|^2; for singletons that is half the squared distance.
  std::vector<double> cost = kernels::omp::pairwise_sq_distances(flat, dim);
  for (double& c : cost) c *= 0.5;

  Dendrogram d;
  for (const auto& p : points) d.leaves.push_back(p.label);

  std::vector<bool> active(n, true);
  std::vector<std::size_t> size(n, 1);
  std::vector<std::size_t> node(n);
  std::iota(node.begin(), node.end(), 0);
  std::vector<std::string> key(d.leaves);  // smallest leaf label in each cluster

  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t bi = n, bj = n;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!active[j]) continue;
        double c = cost[i * n + j];
        bool better = c < best;
        if (!better && c == best) {
          auto cand = std::minmax(key[i], key[j]);
          auto cur = std::minmax(key[bi], key[bj]);
          better = cand < cur;
        }
        if (better) {
          best = c;
          bi = i;
          bj = j;
        }
      }
    }
    if (key[bj] < key[bi]) std::swap(bi, bj);

    const double ni = static_cast<double>(size[bi]);
    const double nj = static_cast<double>(size[bj]);
    const double cij = cost[bi * n + bj];
    for (std::size_t l = 0; l < n; ++l) {
      if (!active[l] || l == bi || l == bj) continue;
      const double nl = static_cast<double>(size[l]);
      double updated = ((nl + ni) * cost[l * n + bi] + (nl + nj) * cost[l * n + bj] - nl * cij) / (nl + ni + nj);
      updated = std::max(updated, 0.0);
      cost[l * n + bi] = cost[bi * n + l] = updated;
    }

    d.merges.push_back(Merge{node[bi], node[bj], std::sqrt(std::max(best, 0.0)), size[bi] + size[bj]});
    active[bj] = false;
    size[bi] += size[bj];
    node[bi] = n + step;
    key[bi] = std::min(key[bi], key[bj]);
  }
  return d;
}

namespace {

struct DisjointSet {
  std::vector<std::size_t> parent;
  explicit DisjointSet(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

}  // namespace

std::map<std::string, int> cut_dendrogram(const Dendrogram& dendrogram, double threshold) {
  const std::size_t n = dendrogram.leaves.size();
  DisjointSet ds(n);
  std::vector<std::size_t> rep(n + dendrogram.merges.size());
  std::iota(rep.begin(), rep.begin() + static_cast<std::ptrdiff_t>(n), 0);
  for (std::size_t s = 0; s < dendrogram.merges.size(); ++s) {
    const Merge& m = dendrogram.merges[s];
    rep[n + s] = rep[m.left];
    if (m.height < threshold) ds.unite(rep[m.left], rep[m.right]);
  }
  std::map<std::size_t, int> id_of_root;
  std::map<std::string, int> out;
  for (std::size_t leaf = 0; leaf < n; ++leaf) {
    auto [it, inserted] = id_of_root.try_emplace(ds.find(leaf), static_cast<int>(id_of_root.size()));
    out[dendrogram.leaves[leaf]] = it->second;
  }
  return out;
}

double ThresholdRange::pick() const {
  if (std::isinf(high)) return low + std::max(1.0, std::abs(low) * 0.1);
  return 0.5 * (low + high);
}

std::optional<ThresholdRange> threshold_range_for_k(const Dendrogram& dendrogram, std::size_t k) {
  const std::size_t n = dendrogram.leaves.size();
  if (k == 0 || k > n) return std::nullopt;
  std::vector<double> h;
  for (const auto& m : dendrogram.merges) h.push_back(m.height);
  std::sort(h.begin(), h.end());
  // Need exactly n-k heights below t.
  const std::size_t below = n - k;
  ThresholdRange r;
  r.low = below == 0 ? 0.0 : h[below - 1];
  r.high = below == h.size() ? std::numeric_limits<double>::infinity() : h[below];
  if (below == 0) return r;  // t = 0 always leaves every leaf apart
  if (!(r.low < r.high)) return std::nullopt;
  return r;
}

std::size_t cluster_count(const std::map<std::string, int>& assignment) {
  std::set<int> ids;
  for (const auto& [label, id] : assignment) ids.insert(id);
  return ids.size();
}

}  // namespace streetsafe::cluster
