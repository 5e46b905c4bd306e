#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "streetsafe/kernels.hpp"
#include "streetsafe/label.hpp"

namespace streetsafe::metrics {

/// Safe is the positive class: tp = predicted Safe and truly Safe.
using ConfusionCounts = kernels::ConfusionTally;

struct Prediction {
  std::string image_id;
  Label label = Label::Unsafe;
};

using LabelIndex = std::map<std::string, Label, std::less<>>;

/// Throws DataError naming the first prediction without a ground-truth label.
ConfusionCounts confusion(std::span<const Prediction> predictions, const LabelIndex& ground_truth);

struct PrecisionRecallF1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Harmonic mean; 0 when both inputs are 0.
double harmonic_f1(double precision, double recall);

/// Each ratio is 0 when its denominator is 0.
PrecisionRecallF1 precision_recall_f1(const ConfusionCounts& counts);

struct MetricReport {
  std::string scope;
  double precision = 0.0;
  double recall = 0.0;
  /// Harmonic mean of the replicate-mean precision and recall.
  double f1 = 0.0;
  double precision_std = 0.0;
  double recall_std = 0.0;
  /// Sample standard deviation of the per-replicate F1 values.
  double f1_std = 0.0;
  std::size_t replicates = 0;
};

MetricReport summarize_replicates(std::string scope, std::span<const ConfusionCounts> per_replicate);

struct DeltaReport {
  std::string persona_id;
  std::map<std::string, double> per_city;
  double aggregate = 0.0;
};

/// persona% - neutral% per city, and their plain mean. Throws DataError when
/// the city sets differ, listing the cities present on only one side.
DeltaReport delta_unsafe(std::string persona_id, const std::map<std::string, double>& persona_rates,
                         const std::map<std::string, double>& neutral_rates);

/// Percentage of shared images where both label maps agree.
double accuracy_vs_neutral(const LabelIndex& persona, const LabelIndex& neutral);

/// 1-based average ranks, rank 1 for the largest value; ties share the mean rank.
std::vector<double> average_ranks(std::span<const double> values);

using Ranking = std::map<std::string, double>;

/// Ranks the keys by value with average_ranks.
Ranking rank_by_value(const std::map<std::string, double>& values);

/// Product-moment correlation of the two rank vectors, aligned by key.
double spearman_rho(const Ranking& a, const Ranking& b);

/// Throws DataError for length mismatch, n < 2, or a constant vector.
double pearson_r(std::span<const double> x, std::span<const double> y);

}  // namespace streetsafe::metrics
