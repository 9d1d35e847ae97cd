#include "poac/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace poac::kernels {
namespace {

inline double sq_distance(const double* a, const double* b, Eigen::Index p) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < p; ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

inline double silhouette_value(std::span<const double> sums, std::span<const std::size_t> sizes,
                               int own) {
  const auto own_size = sizes[static_cast<std::size_t>(own)];
  if (own_size <= 1) return 0.0;
  const double a = sums[static_cast<std::size_t>(own)] / static_cast<double>(own_size - 1);
  double b = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < sums.size(); ++c) {
    if (static_cast<int>(c) == own) continue;
    b = std::min(b, sums[c] / static_cast<double>(sizes[c]));
  }
  const double denom = std::max(a, b);
  return denom > 0.0 ? (b - a) / denom : 0.0;
}

}  // namespace

double ordered_sum(std::span<const double> values) {
  double s = 0.0;
  for (const double v : values) s += v;
  return s;
}

Matrix pairwise_distances(const Matrix& x) {
  const auto n = x.rows();
  const auto p = x.cols();
  Matrix d(n, n);
#pragma omp parallel for schedule(dynamic, 16)
  for (Eigen::Index i = 0; i < n; ++i) {
    d(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = std::sqrt(sq_distance(x.row(i).data(), x.row(j).data(), p));
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return d;
}

std::vector<double> silhouette_samples(const Matrix& distances, const Partition& p) {
  const auto n = static_cast<Eigen::Index>(p.size());
  const auto sizes = p.cluster_sizes();
  std::vector<double> out(p.size());
#pragma omp parallel
  {
    std::vector<double> sums(sizes.size());
#pragma omp for schedule(static)
    for (Eigen::Index i = 0; i < n; ++i) {
      std::fill(sums.begin(), sums.end(), 0.0);
      const double* row = distances.row(i).data();
      for (Eigen::Index j = 0; j < n; ++j) {
        sums[static_cast<std::size_t>(p.assignments[static_cast<std::size_t>(j)])] += row[j];
      }
      out[static_cast<std::size_t>(i)] =
          silhouette_value(sums, sizes, p.assignments[static_cast<std::size_t>(i)]);
    }
  }
  return out;
}

std::vector<double> silhouette_samples_direct(const Matrix& x, const Partition& p) {
  const auto n = x.rows();
  const auto dim = x.cols();
  const auto sizes = p.cluster_sizes();
  std::vector<double> out(p.size());
#pragma omp parallel
  {
    std::vector<double> sums(sizes.size());
#pragma omp for schedule(dynamic, 8)
    for (Eigen::Index i = 0; i < n; ++i) {
      std::fill(sums.begin(), sums.end(), 0.0);
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        sums[static_cast<std::size_t>(p.assignments[static_cast<std::size_t>(j)])] +=
            std::sqrt(sq_distance(x.row(i).data(), x.row(j).data(), dim));
      }
      out[static_cast<std::size_t>(i)] =
          silhouette_value(sums, sizes, p.assignments[static_cast<std::size_t>(i)]);
    }
  }
  return out;
}

void assign_nearest(const Matrix& x, const Matrix& centroids, std::span<int> labels,
                    std::span<double> sq_dist) {
  const auto n = x.rows();
  const auto k = centroids.rows();
  const auto p = x.cols();
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < k; ++c) {
      const double d = sq_distance(x.row(i).data(), centroids.row(c).data(), p);
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(c);
      }
    }
    labels[static_cast<std::size_t>(i)] = best;
    sq_dist[static_cast<std::size_t>(i)] = best_d;
  }
}

std::vector<std::vector<int>> radius_neighbors(const Matrix& x, double eps) {
  const auto n = x.rows();
  const auto p = x.cols();
  const double eps2 = eps * eps;
  std::vector<std::vector<int>> out(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic, 16)
  for (Eigen::Index i = 0; i < n; ++i) {
    auto& nb = out[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < n; ++j) {
      if (sq_distance(x.row(i).data(), x.row(j).data(), p) <= eps2) nb.push_back(static_cast<int>(j));
    }
  }
  return out;
}

namespace reference {

Matrix pairwise_distances(const Matrix& x) {
  const auto n = x.rows();
  Matrix d(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      d(i, j) = i == j ? 0.0 : std::sqrt(sq_distance(x.row(i).data(), x.row(j).data(), x.cols()));
    }
  }
  return d;
}

std::vector<double> silhouette_samples(const Matrix& distances, const Partition& p) {
  // Member lists per cluster, then a(i) and b(i) straight from the definition.
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(p.k));
  for (std::size_t i = 0; i < p.size(); ++i) {
    members[static_cast<std::size_t>(p.assignments[i])].push_back(i);
  }
  std::vector<double> out(p.size(), 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto own = static_cast<std::size_t>(p.assignments[i]);
    if (members[own].size() <= 1) continue;
    const auto ii = static_cast<Eigen::Index>(i);
    double a = 0.0;
    for (const auto j : members[own]) a += distances(ii, static_cast<Eigen::Index>(j));
    a /= static_cast<double>(members[own].size() - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < members.size(); ++c) {
      if (c == own) continue;
      double s = 0.0;
      for (const auto j : members[c]) s += distances(ii, static_cast<Eigen::Index>(j));
      b = std::min(b, s / static_cast<double>(members[c].size()));
    }
    const double denom = std::max(a, b);
    out[i] = denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return out;
}

void assign_nearest(const Matrix& x, const Matrix& centroids, std::span<int> labels,
                    std::span<double> sq_dist) {
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
      const double d = sq_distance(x.row(i).data(), centroids.row(c).data(), x.cols());
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(c);
      }
    }
    labels[static_cast<std::size_t>(i)] = best;
    sq_dist[static_cast<std::size_t>(i)] = best_d;
  }
}

std::vector<std::vector<int>> radius_neighbors(const Matrix& x, double eps) {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.rows(); ++j) {
      if (std::sqrt(sq_distance(x.row(i).data(), x.row(j).data(), x.cols())) <= eps) {
        out[static_cast<std::size_t>(i)].push_back(static_cast<int>(j));
      }
    }
  }
  return out;
}

}  // namespace reference
}  // namespace poac::kernels
