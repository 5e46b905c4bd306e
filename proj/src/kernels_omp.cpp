#include <omp.h>

#include <algorithm>
#include <stdexcept>

#include "streetsafe/kernels.hpp"

namespace streetsafe::kernels::omp {

std::vector<std::uint32_t> cooccurrence(const IndexSets& sets, std::size_t n) {
  std::vector<std::uint32_t> a(n * n, 0);
  const auto m = static_cast<std::ptrdiff_t>(sets.size());
#pragma omp parallel
  {
    std::vector<std::uint32_t> local(n * n, 0);
    std::vector<std::uint32_t> uniq;
#pragma omp for schedule(static)
    for (std::ptrdiff_t img = 0; img < m; ++img) {
      const auto& s = sets[static_cast<std::size_t>(img)];
      uniq.assign(s.begin(), s.end());
      std::sort(uniq.begin(), uniq.end());
      uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
      for (std::size_t i = 0; i < uniq.size(); ++i) {
        for (std::size_t j = i + 1; j < uniq.size(); ++j) {
          ++local[uniq[i] * n + uniq[j]];
          ++local[uniq[j] * n + uniq[i]];
        }
      }
    }
#pragma omp critical(cooccurrence_merge)
    for (std::size_t k = 0; k < a.size(); ++k) a[k] += local[k];
  }
  return a;
}

ConfusionTally confusion(std::span<const Label> predicted, std::span<const Label> truth) {
  if (predicted.size() != truth.size()) throw std::invalid_argument("confusion: length mismatch");
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  const auto n = static_cast<std::ptrdiff_t>(predicted.size());
#pragma omp parallel for schedule(static) reduction(+ : tp, fp, tn, fn)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    bool ps = predicted[static_cast<std::size_t>(i)] == Label::Safe;
    bool ts = truth[static_cast<std::size_t>(i)] == Label::Safe;
    if (ps && ts) ++tp;
    else if (ps) ++fp;
    else if (ts) ++fn;
    else ++tn;
  }
  return ConfusionTally{tp, fp, tn, fn};
}

GroupTally group_counts(std::span<const std::uint32_t> group, std::span<const std::uint8_t> flag, std::size_t groups) {
  if (group.size() != flag.size()) throw std::invalid_argument("group_counts: length mismatch");
  GroupTally t{std::vector<std::size_t>(groups, 0), std::vector<std::size_t>(groups, 0)};
  const auto n = static_cast<std::ptrdiff_t>(group.size());
#pragma omp parallel
  {
    std::vector<std::size_t> flagged(groups, 0), total(groups, 0);
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      auto g = group[static_cast<std::size_t>(i)];
      ++total[g];
      if (flag[static_cast<std::size_t>(i)]) ++flagged[g];
    }
#pragma omp critical(group_counts_merge)
    for (std::size_t g = 0; g < groups; ++g) {
      t.flagged[g] += flagged[g];
      t.total[g] += total[g];
    }
  }
  return t;
}

std::vector<double> pairwise_sq_distances(std::span<const double> points, std::size_t dim) {
  const std::size_t n = dim == 0 ? 0 : points.size() / dim;
  std::vector<double> d(n * n, 0.0);
  const auto rows = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        double diff = points[ui * dim + k] - points[j * dim + k];
        s += diff * diff;
      }
      d[ui * n + j] = s;
    }
  }
  return d;
}

std::vector<double> correlation_matrix(std::span<const double> data, std::size_t len) {
  const std::size_t rows = len == 0 ? 0 : data.size() / len;
  std::vector<double> c(rows * rows, 0.0);
  const auto total = static_cast<std::ptrdiff_t>(rows * rows);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t k = 0; k < total; ++k) {
    const auto uk = static_cast<std::size_t>(k);
    const std::size_t i = uk / rows;
    const std::size_t j = uk % rows;
    c[uk] = pearson_kernel(data.subspan(i * len, len), data.subspan(j * len, len));
  }
  return c;
}

}  // namespace streetsafe::kernels::omp
