// Acceptance gate: one PASS/FAIL line per criterion. Exit status is the
// number of failures.

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "cooccurrence_oracle.hpp"
#include "fixtures.hpp"
#include "modularity_oracle.hpp"
#include "spearman_oracle.hpp"
#include "streetsafe/cluster.hpp"
#include "streetsafe/corpus.hpp"
#include "streetsafe/keywordnet.hpp"
#include "streetsafe/metrics.hpp"
#include "streetsafe/pipeline.hpp"
#include "streetsafe/util.hpp"
#include "ward_oracle.hpp"

using namespace streetsafe;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

Outcome f1_fixture() {
  struct Row {
    const char* city;
    double p, r, f1;
  };
  const Row rows[] = {{"Minneapolis", 60.600, 89.650, 72.317}, {"Denver", 58.600, 90.650, 71.184},
                      {"Toronto", 57.700, 89.900, 70.288}};
  auto t0 = Clock::now();
  double worst = 0.0;
  std::string detail;
  for (const auto& row : rows) {
    // Counts whose ratios hit the published precision and recall exactly: tp/(tp+fp), tp/(tp+fn).
    const std::size_t tp = 1'000'000;
    metrics::ConfusionCounts c{tp, static_cast<std::size_t>(std::llround(tp * (100.0 / row.p - 1.0))), 0,
                               static_cast<std::size_t>(std::llround(tp * (100.0 / row.r - 1.0)))};
    auto m = metrics::precision_recall_f1(c);
    double direct = 100.0 * metrics::harmonic_f1(row.p / 100.0, row.r / 100.0);
    double err = std::max(std::abs(100.0 * m.f1 - row.f1), std::abs(direct - row.f1));
    worst = std::max(worst, err);
    detail += fmt::format("{} {:.3f} ", row.city, direct);
  }
  double secs = seconds_since(t0);
  return {worst <= 0.005 && secs < 1.0, fmt::format("{}max |err| {:.4f} pp, {:.3f}s", detail, worst, secs)};
}

Outcome threshold_semantics() {
  std::vector<corpus::ImageRecord> recs;
  for (double s : {0.0, 0.464, 0.465, 1.0}) {
    corpus::ImageRecord r;
    r.image_id = fmt::format("i{}", recs.size());
    r.trueskill_normalized = s;
    recs.push_back(r);
  }
  double tau = corpus::compute_threshold(recs, corpus::FixedThreshold{0.464});
  auto labeled = corpus::assign_ground_truth(recs, tau);
  std::string got;
  for (const auto& r : labeled) got += r.ground_truth == Label::Safe ? 'S' : 'U';
  return {got == "UUSS", "labels " + got + " (want UUSS)"};
}

Outcome spearman_permutations() {
  auto t0 = Clock::now();
  double worst = 0.0;
  std::size_t cases = 0;
  for (int n = 2; n <= 6; ++n) {
    std::vector<int> base(static_cast<std::size_t>(n));
    std::iota(base.begin(), base.end(), 1);
    auto perm = base;
    do {
      metrics::Ranking a, b;
      for (int i = 0; i < n; ++i) {
        a[fmt::format("c{}", i)] = base[static_cast<std::size_t>(i)];
        b[fmt::format("c{}", i)] = perm[static_cast<std::size_t>(i)];
      }
      worst = std::max(worst, std::abs(metrics::spearman_rho(a, b) - oracle::spearman_closed_form(base, perm)));
      ++cases;
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
  double secs = seconds_since(t0);
  return {worst <= 1e-12 && secs < 1.0, fmt::format("{} permutations, max |err| {:.2e}, {:.3f}s", cases, worst, secs)};
}

Outcome ward_oracle() {
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> u(0, 60);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 2 + rng() % 7, dim = 1 + rng() % 3;
    std::vector<cluster::FeaturePoint> pts;
    std::vector<oracle::WardPoint> op;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> x;
      for (std::size_t d = 0; d < dim; ++d) x.push_back(u(rng));
      pts.push_back({fmt::format("p{}", i), x});
      op.push_back({fmt::format("p{}", i), x});
    }
    auto d = cluster::ward_cluster(pts);
    auto want = oracle::ward_heights(op);
    for (std::size_t s = 0; s < want.size(); ++s) worst = std::max(worst, std::abs(d.merges[s].height - want[s]));
  }
  auto blobs = fixtures::seven_blobs(7);
  auto d = cluster::ward_cluster(blobs);
  // Threshold between the within-blob and between-blob merge heights.
  std::vector<double> h;
  for (const auto& m : d.merges) h.push_back(m.height);
  std::sort(h.begin(), h.end());
  const double cut = 0.5 * (h[h.size() - 7] + h[h.size() - 6]);
  auto k = cluster::cluster_count(cluster::cut_dendrogram(d, cut));
  return {worst <= 1e-9 && k == 7, fmt::format("50 sets, max |dh| {:.2e}; 7-blob cut at {:.3f} -> {} clusters", worst, cut, k)};
}

Outcome louvain_oracle() {
  double worst = 0.0;
  std::size_t graphs = 0;
  for (const auto& f : fixtures::small_connected_graphs()) {
    auto best = oracle::max_modularity(f.weights());
    auto p = keywordnet::louvain(f.graph(), 0);
    worst = std::max(worst, std::abs(p.modularity - best.q));
    ++graphs;
  }
  std::vector<std::tuple<std::size_t, std::size_t, std::uint32_t>> e{{0, 1, 1}};
  double q1 = keywordnet::modularity(keywordnet::KeywordGraph::from_edges({"x", "y"}, e), std::vector<int>{0, 0});
  return {worst <= 1e-9 && q1 == 0.5,
          fmt::format("{} graphs incl. barbell, max |dQ| {:.2e}; single edge Q = {}", graphs, worst, q1)};
}

Outcome centrality_fixture() {
  std::vector<std::tuple<std::size_t, std::size_t, std::uint32_t>> edges;
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = i + 1; j < 5; ++j) edges.emplace_back(i, j, 1 + (i * 3 + j) % 4);
  }
  auto g = keywordnet::KeywordGraph::from_edges({"bustling", "urban", "commercial", "busy", "city"}, edges);
  auto scores = keywordnet::community_degree_centrality(g, keywordnet::Partition{{0, 0, 0, 0, 0}, 0.0});
  std::ostringstream table;
  keywordnet::write_node_table(table, scores);
  bool ok = scores.size() == 5 &&
            std::all_of(scores.begin(), scores.end(), [](const auto& s) { return s.value == 1.0; });
  std::istringstream rows(table.str());
  std::string row;
  std::getline(rows, row);
  int printed = 0;
  while (std::getline(rows, row)) {
    ok = ok && row.ends_with(",0,1.0000");
    ++printed;
  }
  ok = ok && printed == 5;
  return {ok, "5 nodes all 1.0000"};
}

Outcome delta_identities() {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 100);
  double worst_self = 0.0, worst_mean = 0.0;
  for (int t = 0; t < 100; ++t) {
    std::map<std::string, double> persona, neutral;
    const int cities = 1 + static_cast<int>(rng() % 56);
    for (int c = 0; c < cities; ++c) {
      persona[fmt::format("city{}", c)] = u(rng);
      neutral[fmt::format("city{}", c)] = u(rng);
    }
    auto self = metrics::delta_unsafe("p", persona, persona);
    for (const auto& [city, d] : self.per_city) worst_self = std::max(worst_self, std::abs(d));
    worst_self = std::max(worst_self, std::abs(self.aggregate));

    auto d = metrics::delta_unsafe("p", persona, neutral);
    double sum = 0.0;
    for (const auto& [city, v] : d.per_city) sum += v;
    worst_mean = std::max(worst_mean, std::abs(d.aggregate - sum / static_cast<double>(d.per_city.size())));
  }
  return {worst_self == 0.0 && worst_mean <= 1e-12,
          fmt::format("self max |d| {:.1e}, aggregate-vs-mean max {:.1e}", worst_self, worst_mean)};
}

// Ingest, run, report in a fresh directory; returns every report file's bytes.
std::map<std::string, std::string> full_pipeline(const fs::path& root) {
  fs::remove_all(root);
  fs::create_directories(root);
  std::ofstream(root / "corpus.csv") << fixtures::synthetic_corpus_csv({"Toronto", "Denver", "Minneapolis"}, 10, 7);
  pipeline::PipelineConfig c;
  c.corpus = (root / "corpus.csv").string();
  c.out = (root / "out").string();
  c.backend.backend = "mock:7";
  c.personas = "neutral,nat:canada,nat:mexico,gender:female,age:elderly";
  c.replicates = 2;
  c.top_n = 10;
  std::ostringstream log;
  pipeline::cmd_ingest(c, log);
  pipeline::cmd_run(c, log);
  std::map<std::string, std::string> bundle;
  for (const auto& f : pipeline::cmd_report(c, log)) bundle[fs::path(f).filename().string()] = util::read_file(f);
  return bundle;
}

Outcome end_to_end_determinism() {
  auto t0 = Clock::now();
  const auto base = fs::temp_directory_path() / "streetsafe_acceptance";
  auto a = full_pipeline(base / "a");
  auto b = full_pipeline(base / "b");
  double secs = seconds_since(t0);
  fs::remove_all(base);
  std::size_t differing = 0;
  for (const auto& [name, text] : a) differing += !b.contains(name) || b.at(name) != text;
  bool ok = !a.empty() && a.size() == b.size() && differing == 0 && secs < 30.0;
  return {ok, fmt::format("{} tables, {} differ, {:.2f}s for two executions", a.size(), differing, secs)};
}

Outcome keyword_pipeline() {
  // Twelve hand-built assessments with messy surface forms.
  const std::vector<std::array<std::string, 3>> raw{
      {"Vehicle Traffic", "Urban", "Commercial"},   {"traffic", "Busy", "urban"},
      {"Well-Maintained", "Residential", "Quiet"},  {"quiet", "Trees", "residential."},
      {"Graffiti", "Dark", "Abandoned"},            {"abandoned", "Dilapidated", "graffiti!"},
      {"Open Space", "Parks", "Trees"},             {"URBAN", "Vehicle traffic", "Pedestrians"},
      {"Commercial", "Pedestrians", "Busy"},        {"Dark", "Isolated", "Abandoned"},
      {"Residential", "Well maintained", "Fences"}, {"Parks", "Quiet", "Open space"}};
  std::vector<inference::Assessment> as;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    inference::Assessment a;
    a.image_id = fmt::format("img{}", i);
    a.persona_id = "neutral";
    a.classification = Label::Safe;
    a.keywords = raw[i];
    as.push_back(a);
  }
  auto rules = keywordnet::NormalizationRules::defaults();
  auto sets = keywordnet::normalized_keyword_sets(as, rules);
  auto top = keywordnet::top_n_keywords(sets, 8);
  auto g = keywordnet::cooccurrence_graph(sets, top.keywords);
  auto want = oracle::cooccurrence(sets.images, std::set<std::string>(top.keywords.begin(), top.keywords.end()));
  std::size_t mismatches = 0;
  for (std::size_t m = 0; m < g.size(); ++m) {
    for (std::size_t n = 0; n < g.size(); ++n) {
      auto it = want.find({g.nodes[m], g.nodes[n]});
      mismatches += g.weight(m, n) != (it == want.end() ? 0u : it->second);
    }
  }
  std::string traffic = keywordnet::normalize_keyword("Vehicle Traffic", rules);
  return {sets.images.size() == 12 && mismatches == 0 && traffic == "traffic" && g.edge_count() > 0,
          fmt::format("12 images, {} nodes, {} edges, {} mismatches; \"Vehicle Traffic\" -> \"{}\"", g.size(),
                      g.edge_count(), mismatches, traffic)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"F1 fixture (Table S1 rows, +/-0.005 pp, <1 s)", f1_fixture},
      {"Threshold semantics (Fixed 0.464, strict inequality)", threshold_semantics},
      {"Spearman closed form (all permutations n<=6, 1e-12, <1 s)", spearman_permutations},
      {"Ward oracle (50 sets n<=8, 1e-9) and 7-blob cut", ward_oracle},
      {"Louvain exhaustive optimum (<=8 nodes, 1e-9) and single-edge Q=0.5", louvain_oracle},
      {"Degree centrality of a complete 5-node community", centrality_fixture},
      {"Delta_Unsafe identities (self zero, mean to 1e-12)", delta_identities},
      {"End-to-end determinism (mock seed 7, 3x10x5x2, <30 s)", end_to_end_determinism},
      {"Keyword pipeline (12 images vs oracle, Vehicle Traffic -> traffic)", keyword_pipeline},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += !o.pass;
    fmt::print("{} {}: {}\n", o.pass ? "PASS" : "FAIL", name, o.detail);
  }
  fmt::print("{}/{} criteria passed\n", criteria.size() - static_cast<std::size_t>(failures), criteria.size());
  return failures;
}
