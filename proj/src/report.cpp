#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "analysis_context.hpp"
#include "streetsafe/cluster.hpp"
#include "streetsafe/error.hpp"
#include "streetsafe/kernels.hpp"
#include "streetsafe/keywordnet.hpp"
#include "streetsafe/metrics.hpp"
#include "streetsafe/personas.hpp"
#include "streetsafe/pipeline.hpp"
#include "streetsafe/util.hpp"

namespace streetsafe::pipeline {

namespace fs = std::filesystem;
using detail::AnalysisContext;
using detail::write_table;

namespace {

const std::string kNeutral = personas::neutral().id;

std::string pct(double v) { return util::fixed(v, 2); }
std::string f3(double v) { return util::fixed(v, 3); }
std::string f4(double v) { return std::isnan(v) ? "NA" : util::fixed(v, 4); }

std::string csv_row(std::initializer_list<std::string> fields) {
  std::vector<std::string> v(fields);
  return util::join_csv(v) + "\n";
}

// Unsafe percentages per persona and city, averaged over replicates.
struct RateTable {
  std::size_t replicates = 0;
  // [replicate][persona][city]; nullopt when the persona has no assessment there.
  std::vector<std::vector<std::vector<std::optional<double>>>> per_replicate;
  std::vector<std::vector<std::size_t>> samples;  // [persona][city], summed over replicates

  std::optional<double> city(std::size_t p, std::size_t c, double* spread = nullptr) const {
    std::vector<double> v;
    for (const auto& rep : per_replicate) {
      if (rep[p][c]) v.push_back(*rep[p][c]);
    }
    if (v.empty()) return std::nullopt;
    if (spread) *spread = util::sample_stddev(v);
    return util::mean(v);
  }

  // Equal-weight mean over cities within each replicate, then over replicates.
  std::optional<double> all(std::size_t p, double* spread = nullptr) const {
    std::vector<double> v;
    for (const auto& rep : per_replicate) {
      std::vector<double> cities;
      for (const auto& x : rep[p]) {
        if (x) cities.push_back(*x);
      }
      if (!cities.empty()) v.push_back(util::mean(cities));
    }
    if (v.empty()) return std::nullopt;
    if (spread) *spread = util::sample_stddev(v);
    return util::mean(v);
  }

  std::map<std::string, double> by_city(std::size_t p, std::span<const std::string> cities) const {
    std::map<std::string, double> out;
    for (std::size_t c = 0; c < cities.size(); ++c) {
      if (auto v = city(p, c)) out[cities[c]] = *v;
    }
    return out;
  }
};

std::size_t index_of(std::span<const std::string> v, const std::string& x) {
  return static_cast<std::size_t>(std::lower_bound(v.begin(), v.end(), x) - v.begin());
}

RateTable build_rates(const AnalysisContext& ctx) {
  const std::size_t np = ctx.persona_ids.size();
  const std::size_t nc = ctx.cities.size();
  std::map<std::string, std::size_t> persona_index;
  for (std::size_t p = 0; p < np; ++p) persona_index[ctx.persona_ids[p]] = p;

  RateTable t;
  t.replicates = ctx.runs.runs.size();
  t.samples.assign(np, std::vector<std::size_t>(nc, 0));
  for (const auto& run : ctx.runs.runs) {
    std::vector<std::uint32_t> group;
    std::vector<std::uint8_t> flag;
    group.reserve(run.assessments.size());
    flag.reserve(run.assessments.size());
    for (const auto& a : run.assessments) {
      auto it = ctx.city_of.find(a.image_id);
      if (it == ctx.city_of.end()) throw DataError("assessment for `" + a.image_id + "` has no corpus record");
      const std::size_t c = index_of(ctx.cities, it->second);
      group.push_back(static_cast<std::uint32_t>(persona_index.at(a.persona_id) * nc + c));
      flag.push_back(a.classification == Label::Unsafe ? 1 : 0);
    }
    auto tally = kernels::omp::group_counts(group, flag, np * nc);
    auto& rep = t.per_replicate.emplace_back(np, std::vector<std::optional<double>>(nc));
    for (std::size_t p = 0; p < np; ++p) {
      for (std::size_t c = 0; c < nc; ++c) {
        const std::size_t g = p * nc + c;
        if (tally.total[g] == 0) continue;
        rep[p][c] = 100.0 * static_cast<double>(tally.flagged[g]) / static_cast<double>(tally.total[g]);
        t.samples[p][c] += tally.total[g];
      }
    }
  }
  return t;
}

std::size_t neutral_index(const AnalysisContext& ctx) {
  auto it = std::find(ctx.persona_ids.begin(), ctx.persona_ids.end(), kNeutral);
  if (it == ctx.persona_ids.end()) {
    throw DataError("the selected runs have no neutral-persona assessments; delta and accuracy tables need them");
  }
  return static_cast<std::size_t>(it - ctx.persona_ids.begin());
}

// Confusion tallies per replicate for one persona: index 0 pools every image,
// index 1 + c holds city c.
std::vector<std::vector<metrics::ConfusionCounts>> confusion_by_city(const AnalysisContext& ctx,
                                                                     const std::string& persona_id) {
  const std::size_t nc = ctx.cities.size();
  std::vector<std::vector<metrics::ConfusionCounts>> out(1 + nc);
  for (const auto& run : ctx.runs.runs) {
    std::vector<std::vector<metrics::Prediction>> preds(1 + nc);
    for (const auto& a : run.assessments) {
      if (a.persona_id != persona_id) continue;
      const std::size_t c = index_of(ctx.cities, ctx.city_of.find(a.image_id)->second);
      preds[0].push_back({a.image_id, a.classification});
      preds[1 + c].push_back({a.image_id, a.classification});
    }
    for (std::size_t g = 0; g <= nc; ++g) {
      if (!preds[g].empty()) out[g].push_back(metrics::confusion(preds[g], ctx.truth));
    }
  }
  return out;
}

std::string metric_cells(const metrics::MetricReport& m) {
  return util::join_csv(std::vector<std::string>{f3(100 * m.f1), f3(100 * m.precision), f3(100 * m.recall),
                                                 f3(100 * m.f1_std)});
}

void write_metrics(const PipelineConfig& config, const AnalysisContext& ctx, std::vector<std::string>& written) {
  const auto dir = fs::path(config.report_dir());
  std::string by_city = "city,f1_mean,precision_mean,recall_mean,f1_std\n";
  std::string overall = "persona,aggregation,f1_mean,precision_mean,recall_mean,f1_std\n";
  for (const auto& pid : ctx.persona_ids) {
    auto tallies = confusion_by_city(ctx, pid);
    if (tallies[0].empty()) continue;
    auto pooled = metrics::summarize_replicates("pooled", tallies[0]);
    overall += util::csv_escape(pid) + ",pooled," + metric_cells(pooled) + "\n";

    std::vector<double> f1, prec, rec;
    for (std::size_t c = 0; c < ctx.cities.size(); ++c) {
      if (tallies[1 + c].empty()) continue;
      auto m = metrics::summarize_replicates(ctx.cities[c], tallies[1 + c]);
      f1.push_back(m.f1);
      prec.push_back(m.precision);
      rec.push_back(m.recall);
      if (pid == kNeutral) by_city += util::csv_escape(ctx.cities[c]) + "," + metric_cells(m) + "\n";
    }
    metrics::MetricReport city_mean;
    city_mean.f1 = util::mean(f1);
    city_mean.precision = util::mean(prec);
    city_mean.recall = util::mean(rec);
    city_mean.f1_std = util::sample_stddev(f1);
    overall += util::csv_escape(pid) + ",city_mean," + metric_cells(city_mean) + "\n";
  }
  write_table((dir / "metrics_by_city.csv").string(), by_city, written);
  write_table((dir / "metrics_overall.csv").string(), overall, written);
}

void write_rates(const PipelineConfig& config, const AnalysisContext& ctx, const RateTable& rates,
                 std::vector<std::string>& written) {
  const auto dir = fs::path(config.report_dir());
  std::string out = "persona,city,unsafe_percent,sample_count,replicate_std\n";
  for (std::size_t p = 0; p < ctx.persona_ids.size(); ++p) {
    std::size_t total = 0;
    for (std::size_t c = 0; c < ctx.cities.size(); ++c) {
      double spread = 0.0;
      auto v = rates.city(p, c, &spread);
      if (!v) continue;
      total += rates.samples[p][c];
      out += csv_row({ctx.persona_ids[p], ctx.cities[c], pct(*v), std::to_string(rates.samples[p][c]), pct(spread)});
    }
    double spread = 0.0;
    if (auto v = rates.all(p, &spread)) {
      out += csv_row({ctx.persona_ids[p], "ALL", pct(*v), std::to_string(total), pct(spread)});
    }
  }
  write_table((dir / "unsafe_rates.csv").string(), out, written);
}

// Per-replicate agreement with the neutral persona, averaged over replicates.
double mean_accuracy_vs_neutral(const AnalysisContext& ctx, const std::string& persona_id) {
  std::vector<double> per_rep;
  for (const auto& run : ctx.runs.runs) {
    metrics::LabelIndex mine, neutral;
    for (const auto& a : run.assessments) {
      if (a.persona_id == persona_id) mine.emplace(a.image_id, a.classification);
      if (a.persona_id == kNeutral) neutral.emplace(a.image_id, a.classification);
    }
    if (mine.empty() || neutral.empty()) continue;
    bool shared = std::any_of(mine.begin(), mine.end(), [&](const auto& kv) { return neutral.contains(kv.first); });
    if (shared) per_rep.push_back(metrics::accuracy_vs_neutral(mine, neutral));
  }
  return per_rep.empty() ? std::nan("") : util::mean(per_rep);
}

void write_deltas(const PipelineConfig& config, const AnalysisContext& ctx, const RateTable& rates,
                  std::vector<std::string>& written) {
  const auto dir = fs::path(config.report_dir());
  const std::size_t n = neutral_index(ctx);
  const auto neutral_rates = rates.by_city(n, ctx.cities);
  std::string agg = "persona,delta_unsafe_aggregate,accuracy_vs_neutral\n";
  std::string by_city = "persona,city,delta_unsafe\n";
  for (std::size_t p = 0; p < ctx.persona_ids.size(); ++p) {
    auto d = metrics::delta_unsafe(ctx.persona_ids[p], rates.by_city(p, ctx.cities), neutral_rates);
    double acc = mean_accuracy_vs_neutral(ctx, ctx.persona_ids[p]);
    agg += csv_row({ctx.persona_ids[p], pct(d.aggregate), std::isnan(acc) ? "NA" : pct(acc)});
    for (const auto& [city, v] : d.per_city) by_city += csv_row({ctx.persona_ids[p], city, pct(v)});
  }
  write_table((dir / "delta_unsafe.csv").string(), agg, written);
  write_table((dir / "delta_unsafe_by_city.csv").string(), by_city, written);
}

void write_spearman(const PipelineConfig& config, const AnalysisContext& ctx, const RateTable& rates,
                    std::vector<std::string>& written) {
  const auto dir = fs::path(config.report_dir());
  const std::size_t np = ctx.persona_ids.size();
  // Only cities every persona has assessed can be ranked jointly.
  std::vector<std::size_t> common;
  for (std::size_t c = 0; c < ctx.cities.size(); ++c) {
    bool ok = true;
    for (std::size_t p = 0; p < np && ok; ++p) ok = rates.city(p, c).has_value();
    if (ok) common.push_back(c);
  }
  std::vector<double> ranks;
  ranks.reserve(np * common.size());
  for (std::size_t p = 0; p < np; ++p) {
    std::vector<double> v;
    for (std::size_t c : common) v.push_back(*rates.city(p, c));
    auto r = metrics::average_ranks(v);
    ranks.insert(ranks.end(), r.begin(), r.end());
  }
  std::vector<double> rho = common.size() < 2 ? std::vector<double>(np * np, std::nan(""))
                                              : kernels::omp::correlation_matrix(ranks, common.size());
  std::vector<std::string> header{"persona"};
  header.insert(header.end(), ctx.persona_ids.begin(), ctx.persona_ids.end());
  std::string out = util::join_csv(header) + "\n";
  for (std::size_t i = 0; i < np; ++i) {
    std::vector<std::string> row{ctx.persona_ids[i]};
    for (std::size_t j = 0; j < np; ++j) row.push_back(f4(rho[i * np + j]));
    out += util::join_csv(row) + "\n";
  }
  write_table((dir / "spearman_matrix.csv").string(), out, written);
}

struct NationalityStat {
  std::string persona_id;
  std::string country;
  double mean = 0.0;
  double stddev = 0.0;
};

// Mean and sample standard deviation of a nationality's unsafe rate across cities.
std::vector<NationalityStat> nationality_stats(const AnalysisContext& ctx, const RateTable& rates) {
  std::vector<NationalityStat> out;
  for (std::size_t p = 0; p < ctx.persona_ids.size(); ++p) {
    auto persona = personas::from_id(ctx.persona_ids[p]);
    if (persona.kind != personas::PersonaKind::Nationality) continue;
    std::vector<double> v;
    for (const auto& [city, rate] : rates.by_city(p, ctx.cities)) v.push_back(rate);
    out.push_back({persona.id, persona.country, util::mean(v), util::sample_stddev(v)});
  }
  return out;
}

void write_nationality(const PipelineConfig& config, const AnalysisContext& ctx, const RateTable& rates,
                       std::vector<std::string>& written) {
  const auto dir = fs::path(config.report_dir());
  auto stats = nationality_stats(ctx, rates);
  std::string table = "persona,country,mean_unsafe_percent,std_unsafe_percent\n";
  std::vector<double> means, stds;
  for (const auto& s : stats) {
    table += csv_row({s.persona_id, s.country, pct(s.mean), pct(s.stddev)});
    means.push_back(s.mean);
    stds.push_back(s.stddev);
  }
  const double r = stats.size() < 2 ? std::nan("") : kernels::pearson_kernel(means, stds);
  write_table((dir / "nationality_stats.csv").string(), table, written);
  write_table((dir / "nationality_correlation.csv").string(),
              "nationalities,pearson_mean_vs_std\n" + std::to_string(stats.size()) + "," + f4(r) + "\n", written);
}

struct ClusterOutcome {
  double threshold = 0.0;
  std::optional<cluster::ThresholdRange> range;
  std::size_t clusters = 0;
};

ClusterOutcome cluster_and_write(const std::string& name, std::span<const cluster::FeaturePoint> points,
                                 std::size_t default_k, const PipelineConfig& config,
                                 std::vector<std::string>& written) {
  const auto dir = fs::path(config.report_dir());
  auto d = cluster::ward_cluster(points);
  ClusterOutcome o;
  o.range = cluster::threshold_range_for_k(d, std::min(default_k, points.size()));
  if (config.cut_height) {
    o.threshold = *config.cut_height;
  } else if (o.range) {
    o.threshold = o.range->pick();
  } else {
    throw DataError(fmt::format("{}: tied merge heights leave no cut with exactly {} clusters; pass --cut-height",
                                name, default_k));
  }
  auto assignment = cluster::cut_dendrogram(d, o.threshold);
  o.clusters = cluster::cluster_count(assignment);

  std::string merges = "step,left,right,height,size\n";
  for (std::size_t s = 0; s < d.merges.size(); ++s) {
    const auto& m = d.merges[s];
    merges += csv_row({std::to_string(s + 1), d.node_name(m.left), d.node_name(m.right), f4(m.height),
                       std::to_string(m.size)});
  }
  std::string assign = "label,cluster_id\n";
  for (const auto& leaf : d.leaves) assign += csv_row({leaf, std::to_string(assignment.at(leaf))});
  write_table((dir / fmt::format("cluster_{}_merges.csv", name)).string(), merges, written);
  write_table((dir / fmt::format("cluster_{}_assignments.csv", name)).string(), assign, written);
  return o;
}

std::vector<std::string> cluster_tables(const PipelineConfig& config, const AnalysisContext& ctx,
                                        const RateTable& rates, std::ostream& log) {
  std::vector<std::string> written;
  std::string summary = "clustering,points,threshold,clusters,k_range_low,k_range_high\n";
  auto record = [&](const std::string& name, std::size_t points, const ClusterOutcome& o) {
    std::string high = o.range ? (std::isinf(o.range->high) ? "inf" : f4(o.range->high)) : "NA";
    summary += csv_row({name, std::to_string(points), f4(o.threshold), std::to_string(o.clusters),
                        o.range ? f4(o.range->low) : "NA", high});
    fmt::print(log, "{}: {} points -> {} clusters at threshold {}\n", name, points, o.clusters, f4(o.threshold));
  };

  // Cities: mean unsafe rate across the selected personas.
  std::vector<cluster::FeaturePoint> city_points;
  for (std::size_t c = 0; c < ctx.cities.size(); ++c) {
    std::vector<double> v;
    for (std::size_t p = 0; p < ctx.persona_ids.size(); ++p) {
      if (auto r = rates.city(p, c)) v.push_back(*r);
    }
    if (!v.empty()) city_points.push_back({ctx.cities[c], {util::mean(v)}});
  }
  if (city_points.size() >= 2) {
    record("cities", city_points.size(), cluster_and_write("cities", city_points, config.city_clusters, config, written));
  } else {
    fmt::print(log, "cities: fewer than two, clustering skipped\n");
  }

  std::vector<cluster::FeaturePoint> nat_points;
  for (const auto& s : nationality_stats(ctx, rates)) nat_points.push_back({s.country, {s.mean, s.stddev}});
  if (nat_points.size() >= 2) {
    record("nationalities", nat_points.size(),
           cluster_and_write("nationalities", nat_points, config.nationality_clusters, config, written));
  } else {
    fmt::print(log, "nationalities: fewer than two, clustering skipped\n");
  }
  write_table((fs::path(config.report_dir()) / "cluster_thresholds.csv").string(), summary, written);
  return written;
}

keywordnet::NormalizationRules rules_for(const PipelineConfig& config) {
  if (config.synonyms.empty()) return keywordnet::NormalizationRules::defaults();
  std::ifstream in(config.synonyms);
  if (!in) throw UsageError("cannot open synonyms file " + config.synonyms);
  return keywordnet::NormalizationRules::with_synonyms(in);
}

std::vector<std::string> network_tables(const PipelineConfig& config, const AnalysisContext& ctx, std::ostream& log) {
  std::vector<std::string> written;
  const auto dir = fs::path(config.report_dir());
  const auto rules = rules_for(config);
  if (config.network_persona) personas::from_id(*config.network_persona);

  std::vector<inference::Assessment> all;
  for (const auto& run : ctx.runs.runs) all.insert(all.end(), run.assessments.begin(), run.assessments.end());

  std::string summary = "classification,assessments,dropped_empty,nodes,edges,communities,modularity\n";
  for (Label label : {Label::Safe, Label::Unsafe}) {
    const std::string name = util::to_lower_ascii(to_string(label));
    auto subset = keywordnet::filter_assessments(all, label, config.network_persona);
    auto sets = keywordnet::normalized_keyword_sets(subset, rules);

    keywordnet::KeywordGraph graph;
    std::optional<keywordnet::Partition> partition;
    if (!sets.images.empty()) {
      auto top = keywordnet::top_n_keywords(sets, config.top_n);
      if (top.short_set) {
        fmt::print(log, "{}: only {} distinct keywords (top-n {})\n", name, top.keywords.size(), config.top_n);
      }
      graph = keywordnet::cooccurrence_graph(sets, top.keywords);
      if (graph.edge_count() > 0) partition = keywordnet::louvain(graph, config.seed);
    }
    if (!partition) {
      // No edges: every keyword is its own community and Q is undefined.
      keywordnet::Partition p;
      for (std::size_t i = 0; i < graph.size(); ++i) p.community.push_back(static_cast<int>(i));
      p.modularity = std::nan("");
      partition = p;
    }
    std::ostringstream nodes, edges;
    keywordnet::write_node_table(nodes, keywordnet::community_degree_centrality(graph, *partition));
    keywordnet::write_edge_table(edges, graph);
    write_table((dir / fmt::format("network_{}_nodes.csv", name)).string(), nodes.str(), written);
    write_table((dir / fmt::format("network_{}_edges.csv", name)).string(), edges.str(), written);
    summary += csv_row({std::string(to_string(label)), std::to_string(subset.size()),
                        std::to_string(sets.dropped_empty), std::to_string(graph.size()),
                        std::to_string(graph.edge_count()), std::to_string(partition->community_count()),
                        f4(partition->modularity)});
    fmt::print(log, "{} network: {} nodes, {} edges, Q = {}\n", name, graph.size(), graph.edge_count(),
               f4(partition->modularity));
  }
  write_table((dir / "network_summary.csv").string(), summary, written);
  return written;
}

}  // namespace

std::vector<std::string> cmd_report(const PipelineConfig& config, std::ostream& log) {
  auto ctx = detail::load_context(config);
  fs::create_directories(config.report_dir());
  auto rates = build_rates(ctx);
  std::vector<std::string> written;
  write_metrics(config, ctx, written);
  write_rates(config, ctx, rates, written);
  write_deltas(config, ctx, rates, written);
  write_spearman(config, ctx, rates, written);
  write_nationality(config, ctx, rates, written);
  for (auto& f : cluster_tables(config, ctx, rates, log)) written.push_back(std::move(f));
  for (auto& f : network_tables(config, ctx, log)) written.push_back(std::move(f));
  fmt::print(log, "wrote {} tables to {}\n", written.size(), config.report_dir());
  return written;
}

std::vector<std::string> cmd_cluster(const PipelineConfig& config, std::ostream& log) {
  auto ctx = detail::load_context(config);
  fs::create_directories(config.report_dir());
  return cluster_tables(config, ctx, build_rates(ctx), log);
}

std::vector<std::string> cmd_network(const PipelineConfig& config, std::ostream& log) {
  auto ctx = detail::load_context(config);
  fs::create_directories(config.report_dir());
  return network_tables(config, ctx, log);
}

}  // namespace streetsafe::pipeline
