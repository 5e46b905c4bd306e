#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "streetsafe/kernels.hpp"

namespace streetsafe::kernels {

double pearson_kernel(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double dx = x[i] - mx;
    double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

namespace serial {

std::vector<std::uint32_t> cooccurrence(const IndexSets& sets, std::size_t n) {
  std::vector<std::uint32_t> a(n * n, 0);
  std::vector<std::uint32_t> uniq;
  for (const auto& s : sets) {
    uniq.assign(s.begin(), s.end());
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    for (std::size_t i = 0; i < uniq.size(); ++i) {
      for (std::size_t j = i + 1; j < uniq.size(); ++j) {
        ++a[uniq[i] * n + uniq[j]];
        ++a[uniq[j] * n + uniq[i]];
      }
    }
  }
  return a;
}

ConfusionTally confusion(std::span<const Label> predicted, std::span<const Label> truth) {
  if (predicted.size() != truth.size()) throw std::invalid_argument("confusion: length mismatch");
  ConfusionTally t;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    bool ps = predicted[i] == Label::Safe;
    bool ts = truth[i] == Label::Safe;
    if (ps && ts) ++t.tp;
    else if (ps) ++t.fp;
    else if (ts) ++t.fn;
    else ++t.tn;
  }
  return t;
}

GroupTally group_counts(std::span<const std::uint32_t> group, std::span<const std::uint8_t> flag, std::size_t groups) {
  if (group.size() != flag.size()) throw std::invalid_argument("group_counts: length mismatch");
  GroupTally t{std::vector<std::size_t>(groups, 0), std::vector<std::size_t>(groups, 0)};
  for (std::size_t i = 0; i < group.size(); ++i) {
    ++t.total[group[i]];
    if (flag[i]) ++t.flagged[group[i]];
  }
  return t;
}

std::vector<double> pairwise_sq_distances(std::span<const double> points, std::size_t dim) {
  const std::size_t n = dim == 0 ? 0 : points.size() / dim;
  std::vector<double> d(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        double diff = points[i * dim + k] - points[j * dim + k];
        s += diff * diff;
      }
      d[i * n + j] = s;
    }
  }
  return d;
}

std::vector<double> correlation_matrix(std::span<const double> data, std::size_t len) {
  const std::size_t rows = len == 0 ? 0 : data.size() / len;
  std::vector<double> c(rows * rows, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < rows; ++j) {
      c[i * rows + j] = pearson_kernel(data.subspan(i * len, len), data.subspan(j * len, len));
    }
  }
  return c;
}

}  // namespace serial

}  // namespace streetsafe::kernels
