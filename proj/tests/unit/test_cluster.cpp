#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "fixtures.hpp"
#include "streetsafe/cluster.hpp"
#include "streetsafe/error.hpp"
#include "ward_oracle.hpp"

using namespace streetsafe;
using namespace streetsafe::cluster;

namespace {

std::vector<FeaturePoint> random_points(std::mt19937_64& rng, std::size_t n, std::size_t dim) {
  std::uniform_real_distribution<double> u(0, 50);
  std::vector<FeaturePoint> pts;
  for (std::size_t i = 0; i < n; ++i) {
    FeaturePoint p{"p" + std::to_string(i), {}};
    for (std::size_t d = 0; d < dim; ++d) p.features.push_back(u(rng));
    pts.push_back(p);
  }
  return pts;
}

std::vector<double> heights(const Dendrogram& d) {
  std::vector<double> h;
  for (const auto& m : d.merges) h.push_back(m.height);
  return h;
}

// Cluster membership as a set of label sets, independent of cluster ids.
std::set<std::set<std::string>> groups(const std::map<std::string, int>& assignment) {
  std::map<int, std::set<std::string>> by_id;
  for (const auto& [label, id] : assignment) by_id[id].insert(label);
  std::set<std::set<std::string>> out;
  for (auto& [id, g] : by_id) out.insert(g);
  return out;
}

}  // namespace

TEST_CASE("euclidean") {
  CHECK(euclidean(std::vector<double>{0, 0}, std::vector<double>{3, 4}) == 5.0);
  CHECK(euclidean(std::vector<double>{1, 2}, std::vector<double>{1, 2}) == 0.0);
  CHECK_THROWS_AS(euclidean(std::vector<double>{1}, std::vector<double>{1, 2}), DataError);
}

TEST_CASE("ward on {0, 1, 10}") {
  std::vector<FeaturePoint> pts{{"a", {0}}, {"b", {1}}, {"c", {10}}};
  auto d = ward_cluster(pts);
  REQUIRE(d.merges.size() == 2);
  CHECK(d.merges[0].height == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
  CHECK(d.merges[0].size == 2);
  CHECK(d.merges[1].height == doctest::Approx(std::sqrt(2.0 / 3.0) * 9.5).epsilon(1e-12));
  CHECK(d.merges[1].height == doctest::Approx(7.757).epsilon(1e-4));
  CHECK(d.node_name(d.merges[1].left) == "node3");
}

TEST_CASE("ward edge cases") {
  std::vector<FeaturePoint> same{{"a", {2, 2}}, {"b", {2, 2}}};
  auto d = ward_cluster(same);
  REQUIRE(d.merges.size() == 1);
  CHECK(d.merges[0].height == 0.0);
  CHECK_THROWS_AS(ward_cluster(std::vector<FeaturePoint>{{"a", {1}}}), DataError);
  CHECK_THROWS_AS(ward_cluster(std::vector<FeaturePoint>{{"a", {1}}, {"b", {NAN}}}), DataError);
  CHECK_THROWS_AS(ward_cluster(std::vector<FeaturePoint>{{"a", {1}}, {"a", {2}}}), DataError);
}

TEST_CASE("equal heights merge the lexicographically smallest pair first") {
  std::vector<FeaturePoint> pts{{"d", {0}}, {"c", {1}}, {"b", {10}}, {"a", {11}}};
  auto d = ward_cluster(pts);
  CHECK(d.node_name(d.merges[0].left) == "a");
  CHECK(d.node_name(d.merges[0].right) == "b");
}

TEST_CASE("ward matches the from-scratch oracle") {
  std::mt19937_64 rng(99);
  for (int t = 0; t < 50; ++t) {
    auto pts = random_points(rng, 2 + rng() % 7, 1 + rng() % 3);
    std::vector<oracle::WardPoint> op;
    for (const auto& p : pts) op.push_back({p.label, p.features});
    auto got = heights(ward_cluster(pts));
    auto want = oracle::ward_heights(op);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - want[i]) < 1e-9);
    CHECK(std::is_sorted(got.begin(), got.end()));
  }
}

TEST_CASE("translation leaves heights unchanged; permutation leaves the cut unchanged") {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 20; ++t) {
    auto pts = random_points(rng, 8, 2);
    auto moved = pts;
    for (auto& p : moved) p.features[0] += 123.0, p.features[1] -= 45.0;
    auto h1 = heights(ward_cluster(pts)), h2 = heights(ward_cluster(moved));
    for (std::size_t i = 0; i < h1.size(); ++i) CHECK(h1[i] == doctest::Approx(h2[i]).epsilon(1e-9));

    auto shuffled = pts;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const double cut = h1[4] * 1.0000001;
    CHECK(groups(cut_dendrogram(ward_cluster(pts), cut)) == groups(cut_dendrogram(ward_cluster(shuffled), cut)));
  }
}

TEST_CASE("cut examples") {
  auto pts = fixtures::seven_blobs(1);
  auto d = ward_cluster(pts);
  CHECK(cluster_count(cut_dendrogram(d, 0.0)) == pts.size());
  CHECK(cluster_count(cut_dendrogram(d, d.merges.back().height + 1)) == 1);

  auto range = threshold_range_for_k(d, 7);
  REQUIRE(range);
  auto assignment = cut_dendrogram(d, range->pick());
  CHECK(cluster_count(assignment) == 7);
  for (const auto& [label, id] : assignment) {
    // every member of a blob shares its cluster
    CHECK(assignment.at(label.substr(0, 2) + "_0") == id);
  }
  // ids count up in leaf order
  CHECK(assignment.at("b0_0") == 0);
  CHECK(assignment.at("b1_0") == 1);
}

TEST_CASE("threshold range for k") {
  std::vector<FeaturePoint> pts{{"a", {0}}, {"b", {1}}, {"c", {10}}};
  auto d = ward_cluster(pts);
  for (std::size_t k = 1; k <= 3; ++k) {
    auto r = threshold_range_for_k(d, k);
    REQUIRE(r);
    CHECK(cluster_count(cut_dendrogram(d, r->pick())) == k);
    CHECK(cluster_count(cut_dendrogram(d, r->high)) == k);
  }
  CHECK(std::isinf(threshold_range_for_k(d, 1)->high));
  CHECK_FALSE(threshold_range_for_k(d, 0));
  CHECK_FALSE(threshold_range_for_k(d, 4));

  // Tied heights: no threshold isolates exactly 3 of these 4 points.
  std::vector<FeaturePoint> tied{{"a", {0}}, {"b", {1}}, {"c", {10}}, {"d", {11}}};
  CHECK_FALSE(threshold_range_for_k(ward_cluster(tied), 3));
}
