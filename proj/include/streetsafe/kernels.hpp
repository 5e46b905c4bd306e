#pragma once

// Data-parallel inner loops of the analysis chain. Each kernel has a serial
// reference and an OpenMP version; both produce bit-identical results
// (integer tallies, or doubles computed entry-by-entry in the same order).

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "streetsafe/label.hpp"

namespace streetsafe::kernels {

struct ConfusionTally {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  friend bool operator==(const ConfusionTally&, const ConfusionTally&) = default;
};

struct GroupTally {
  std::vector<std::size_t> flagged;
  std::vector<std::size_t> total;

  friend bool operator==(const GroupTally&, const GroupTally&) = default;
};

/// Node-index sets, one per image; indices < n, duplicates allowed.
using IndexSets = std::vector<std::vector<std::uint32_t>>;

namespace serial {

/// Row-major n*n pair counts; each image counts once per unordered pair.
std::vector<std::uint32_t> cooccurrence(const IndexSets& sets, std::size_t n);

ConfusionTally confusion(std::span<const Label> predicted, std::span<const Label> truth);

/// Per-group counts of flagged items. group[i] < groups.
GroupTally group_counts(std::span<const std::uint32_t> group, std::span<const std::uint8_t> flag, std::size_t groups);

/// Row-major n*n squared Euclidean distances between `points` rows of width dim.
std::vector<double> pairwise_sq_distances(std::span<const double> points, std::size_t dim);

/// Row-major rows*rows Pearson correlations between rows of width len.
/// Entries involving a constant row are NaN.
std::vector<double> correlation_matrix(std::span<const double> data, std::size_t len);

}  // namespace serial

namespace omp {

std::vector<std::uint32_t> cooccurrence(const IndexSets& sets, std::size_t n);
ConfusionTally confusion(std::span<const Label> predicted, std::span<const Label> truth);
GroupTally group_counts(std::span<const std::uint32_t> group, std::span<const std::uint8_t> flag, std::size_t groups);
std::vector<double> pairwise_sq_distances(std::span<const double> points, std::size_t dim);
std::vector<double> correlation_matrix(std::span<const double> data, std::size_t len);

}  // namespace omp

/// Pearson correlation of two equal-length vectors; NaN if either is constant.
double pearson_kernel(std::span<const double> x, std::span<const double> y);

}  // namespace streetsafe::kernels
