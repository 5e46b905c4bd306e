#pragma once

// Shared synthetic inputs for unit and acceptance tests.

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "modularity_oracle.hpp"
#include "streetsafe/cluster.hpp"
#include "streetsafe/keywordnet.hpp"

namespace fixtures {

// Seven tight Gaussian blobs in (mean, std) space, 4 points each, far apart.
inline std::vector<streetsafe::cluster::FeaturePoint> seven_blobs(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.3);
  const double centers[7][2] = {{10, 5}, {20, 5}, {30, 5}, {10, 20}, {20, 20}, {30, 20}, {45, 12}};
  std::vector<streetsafe::cluster::FeaturePoint> pts;
  for (int b = 0; b < 7; ++b) {
    for (int i = 0; i < 4; ++i) {
      pts.push_back({"b" + std::to_string(b) + "_" + std::to_string(i),
                     {centers[b][0] + noise(rng), centers[b][1] + noise(rng)}});
    }
  }
  return pts;
}

struct GraphFixture {
  std::string name;
  std::size_t n = 0;
  std::vector<std::tuple<std::size_t, std::size_t, std::uint32_t>> edges;

  streetsafe::keywordnet::KeywordGraph graph() const {
    std::vector<std::string> nodes;
    for (std::size_t i = 0; i < n; ++i) nodes.push_back("k" + std::to_string(i));
    return streetsafe::keywordnet::KeywordGraph::from_edges(nodes, edges);
  }

  oracle::Weights weights() const {
    oracle::Weights w(n, std::vector<double>(n, 0.0));
    for (auto [a, b, x] : edges) w[a][b] = w[b][a] = x;
    return w;
  }
};

inline GraphFixture barbell() {
  return {"barbell", 6, {{0, 1, 1}, {0, 2, 1}, {1, 2, 1}, {3, 4, 1}, {3, 5, 1}, {4, 5, 1}, {2, 3, 1}}};
}

inline GraphFixture two_triangles() {
  return {"two_triangles", 6, {{0, 1, 1}, {0, 2, 1}, {1, 2, 1}, {3, 4, 1}, {3, 5, 1}, {4, 5, 1}}};
}

// Connected graphs of up to 8 nodes: hand-built shapes plus seeded random
// weighted graphs (a random spanning tree keeps each one connected).
inline std::vector<GraphFixture> small_connected_graphs() {
  std::vector<GraphFixture> out{barbell()};
  out.push_back({"single_edge", 2, {{0, 1, 1}}});
  out.push_back({"path4", 4, {{0, 1, 1}, {1, 2, 1}, {2, 3, 1}}});
  out.push_back({"star5", 5, {{0, 1, 1}, {0, 2, 1}, {0, 3, 1}, {0, 4, 1}}});
  out.push_back({"k5", 5, {{0, 1, 1}, {0, 2, 1}, {0, 3, 1}, {0, 4, 1}, {1, 2, 1}, {1, 3, 1}, {1, 4, 1}, {2, 3, 1},
                          {2, 4, 1}, {3, 4, 1}}});
  out.push_back({"weighted_barbell", 8,
                 {{0, 1, 5}, {0, 2, 4}, {1, 2, 6}, {2, 3, 5}, {3, 0, 3}, {4, 5, 7}, {4, 6, 2}, {5, 6, 4}, {6, 7, 5},
                  {7, 4, 3}, {3, 4, 1}}});
  std::mt19937_64 rng(2024);
  for (int g = 0; g < 24; ++g) {
    const std::size_t n = 3 + static_cast<std::size_t>(g % 6);
    GraphFixture f{"random" + std::to_string(g), n, {}};
    std::vector<std::vector<std::uint32_t>> w(n, std::vector<std::uint32_t>(n, 0));
    for (std::size_t i = 1; i < n; ++i) {
      std::size_t j = std::uniform_int_distribution<std::size_t>(0, i - 1)(rng);
      w[i][j] = w[j][i] = std::uniform_int_distribution<std::uint32_t>(1, 9)(rng);
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (w[i][j] == 0 && std::bernoulli_distribution(0.35)(rng)) {
          w[i][j] = w[j][i] = std::uniform_int_distribution<std::uint32_t>(1, 9)(rng);
        }
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (w[i][j]) f.edges.emplace_back(i, j, w[i][j]);
      }
    }
    out.push_back(std::move(f));
  }
  return out;
}

// Raw corpus CSV: `per_city` images in each city with seeded TrueSkill scores.
inline std::string synthetic_corpus_csv(const std::vector<std::string>& cities, int per_city, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> score(8.0, 44.5);
  std::string out = "image_id,city,nation,lat,lon,trueskill_raw\n";
  for (const auto& city : cities) {
    for (int i = 0; i < per_city; ++i) {
      std::string id;
      for (char c : city) {
        if (std::isalpha(static_cast<unsigned char>(c))) id.push_back(static_cast<char>(std::tolower(c)));
      }
      id += "_" + std::to_string(i);
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.3f", score(rng));
      out += id + "," + city + ",,,," + buf + "\n";
    }
  }
  return out;
}

}  // namespace fixtures
