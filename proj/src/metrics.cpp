#include "streetsafe/metrics.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "streetsafe/error.hpp"
#include "streetsafe/util.hpp"

namespace streetsafe::metrics {

ConfusionCounts confusion(std::span<const Prediction> predictions, const LabelIndex& ground_truth) {
  std::vector<Label> predicted;
  std::vector<Label> truth;
  predicted.reserve(predictions.size());
  truth.reserve(predictions.size());
  for (const auto& p : predictions) {
    auto it = ground_truth.find(p.image_id);
    if (it == ground_truth.end()) throw DataError("no ground-truth label for image `" + p.image_id + "`");
    predicted.push_back(p.label);
    truth.push_back(it->second);
  }
  return kernels::omp::confusion(predicted, truth);
}

double harmonic_f1(double precision, double recall) {
  double denom = precision + recall;
  return denom > 0.0 ? 2.0 * precision * recall / denom : 0.0;
}

PrecisionRecallF1 precision_recall_f1(const ConfusionCounts& c) {
  auto ratio = [](std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  PrecisionRecallF1 r;
  r.precision = ratio(c.tp, c.tp + c.fp);
  r.recall = ratio(c.tp, c.tp + c.fn);
  r.f1 = harmonic_f1(r.precision, r.recall);
  return r;
}

MetricReport summarize_replicates(std::string scope, std::span<const ConfusionCounts> per_replicate) {
  MetricReport m;
  m.scope = std::move(scope);
  m.replicates = per_replicate.size();
  std::vector<double> p, r, f;
  for (const auto& c : per_replicate) {
    auto prf = precision_recall_f1(c);
    p.push_back(prf.precision);
    r.push_back(prf.recall);
    f.push_back(prf.f1);
  }
  m.precision = util::mean(p);
  m.recall = util::mean(r);
  m.f1 = harmonic_f1(m.precision, m.recall);
  m.precision_std = util::sample_stddev(p);
  m.recall_std = util::sample_stddev(r);
  m.f1_std = util::sample_stddev(f);
  return m;
}

DeltaReport delta_unsafe(std::string persona_id, const std::map<std::string, double>& persona_rates,
                         const std::map<std::string, double>& neutral_rates) {
  std::vector<std::string> only_neutral;
  for (const auto& [city, v] : neutral_rates) {
    if (!persona_rates.contains(city)) only_neutral.push_back(city);
  }
  std::vector<std::string> persona_side;
  for (const auto& [city, v] : persona_rates) {
    if (!neutral_rates.contains(city)) persona_side.push_back(city);
  }
  if (!persona_side.empty() || !only_neutral.empty()) {
    throw DataError(fmt::format("city sets differ for `{}`: only persona [{}], only neutral [{}]", persona_id,
                                fmt::join(persona_side, ", "), fmt::join(only_neutral, ", ")));
  }
  if (persona_rates.empty()) throw DataError("delta: no cities for `" + persona_id + "`");

  DeltaReport d;
  d.persona_id = std::move(persona_id);
  double sum = 0.0;
  for (const auto& [city, pct] : persona_rates) {
    double delta = pct - neutral_rates.at(city);
    d.per_city.emplace(city, delta);
    sum += delta;
  }
  d.aggregate = sum / static_cast<double>(d.per_city.size());
  return d;
}

double accuracy_vs_neutral(const LabelIndex& persona, const LabelIndex& neutral) {
  std::size_t shared = 0, agree = 0;
  for (const auto& [image, label] : persona) {
    auto it = neutral.find(image);
    if (it == neutral.end()) continue;
    ++shared;
    if (it->second == label) ++agree;
  }
  if (shared == 0) throw DataError("accuracy vs neutral: no images in common");
  return 100.0 * static_cast<double>(agree) / static_cast<double>(shared);
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

Ranking rank_by_value(const std::map<std::string, double>& values) {
  std::vector<double> v;
  for (const auto& [k, x] : values) v.push_back(x);
  auto r = average_ranks(v);
  Ranking out;
  std::size_t i = 0;
  for (const auto& [k, x] : values) out.emplace(k, r[i++]);
  return out;
}

double spearman_rho(const Ranking& a, const Ranking& b) {
  if (a.size() != b.size() || !std::equal(a.begin(), a.end(), b.begin(), [](const auto& x, const auto& y) {
        return x.first == y.first;
      })) {
    throw DataError("spearman: rankings cover different keys");
  }
  if (a.size() < 2) throw DataError("spearman: at least two ranked items are required");
  std::vector<double> ra, rb;
  for (const auto& [k, r] : a) ra.push_back(r);
  for (const auto& [k, r] : b) rb.push_back(r);
  return pearson_r(ra, rb);
}

double pearson_r(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DataError("pearson: vectors differ in length");
  if (x.size() < 2) throw DataError("pearson: at least two observations are required");
  double r = kernels::pearson_kernel(x, y);
  if (std::isnan(r)) throw DataError("pearson: correlation undefined for a constant vector");
  return r;
}

}  // namespace streetsafe::metrics
