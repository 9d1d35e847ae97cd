#include "poac/cvi.hpp"

#include <cmath>
#include <limits>
#include <map>

#include "poac/kernels.hpp"

namespace poac::cvi {
namespace {

void check_silhouette_domain(const Partition& p, Eigen::Index n) {
  require_canonical(p);
  if (static_cast<Eigen::Index>(p.size()) != n) throw Error(ErrorCode::ShapeError, "partition/data size mismatch");
  if (p.k < 2 || p.k > static_cast<int>(n) - 1) {
    throw Error(ErrorCode::UndefinedCvi, "silhouette needs 2 <= k <= n-1, got k=" + std::to_string(p.k));
  }
}

std::int64_t c2(std::int64_t m) { return m * (m - 1) / 2; }

struct Contingency {
  std::vector<std::int64_t> cells;  // non-zero n_ij
  std::vector<std::int64_t> rows;   // row marginals
  std::vector<std::int64_t> cols;   // column marginals
  std::int64_t n = 0;
};

Contingency contingency(const Partition& u, const Partition& v) {
  if (u.size() != v.size()) throw Error(ErrorCode::ShapeError, "partitions differ in length");
  if (u.size() < 2) throw Error(ErrorCode::ShapeError, "need at least 2 elements");
  std::map<int, std::size_t> ru;
  std::map<int, std::size_t> rv;
  for (const int a : u.assignments) ru.emplace(a, ru.size());
  for (const int b : v.assignments) rv.emplace(b, rv.size());
  Contingency t;
  t.n = static_cast<std::int64_t>(u.size());
  t.rows.assign(ru.size(), 0);
  t.cols.assign(rv.size(), 0);
  std::vector<std::int64_t> table(ru.size() * rv.size(), 0);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const auto r = ru.at(u.assignments[i]);
    const auto c = rv.at(v.assignments[i]);
    ++table[r * rv.size() + c];
    ++t.rows[r];
    ++t.cols[c];
  }
  for (const auto cell : table) {
    if (cell > 1) t.cells.push_back(cell);
  }
  return t;
}

}  // namespace

double silhouette(const Matrix& x, const Partition& p) {
  check_silhouette_domain(p, x.rows());
  const auto s = kernels::silhouette_samples_direct(x, p);
  return kernels::ordered_sum(s) / static_cast<double>(s.size());
}

double silhouette_precomputed(const Matrix& distances, const Partition& p) {
  check_silhouette_domain(p, distances.rows());
  const auto s = kernels::silhouette_samples(distances, p);
  return kernels::ordered_sum(s) / static_cast<double>(s.size());
}

double davies_bouldin(const Matrix& x, const Partition& p) {
  require_canonical(p);
  if (static_cast<Eigen::Index>(p.size()) != x.rows()) throw Error(ErrorCode::ShapeError, "partition/data size mismatch");
  if (p.k < 2) throw Error(ErrorCode::UndefinedCvi, "Davies-Bouldin needs k >= 2");
  const auto k = static_cast<Eigen::Index>(p.k);
  Matrix centroids = Matrix::Zero(k, x.cols());
  const auto sizes = p.cluster_sizes();
  for (Eigen::Index i = 0; i < x.rows(); ++i) centroids.row(p.assignments[static_cast<std::size_t>(i)]) += x.row(i);
  for (Eigen::Index c = 0; c < k; ++c) centroids.row(c) /= static_cast<double>(sizes[static_cast<std::size_t>(c)]);

  std::vector<double> spread(static_cast<std::size_t>(k), 0.0);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const int c = p.assignments[static_cast<std::size_t>(i)];
    spread[static_cast<std::size_t>(c)] += (x.row(i) - centroids.row(c)).norm();
  }
  for (Eigen::Index c = 0; c < k; ++c) spread[static_cast<std::size_t>(c)] /= static_cast<double>(sizes[static_cast<std::size_t>(c)]);

  double total = 0.0;
  for (Eigen::Index a = 0; a < k; ++a) {
    double worst = 0.0;
    for (Eigen::Index b = 0; b < k; ++b) {
      if (a == b) continue;
      const double num = spread[static_cast<std::size_t>(a)] + spread[static_cast<std::size_t>(b)];
      const double den = (centroids.row(a) - centroids.row(b)).norm();
      double ratio = 0.0;
      if (den == 0.0) {
        if (num == 0.0) throw Error(ErrorCode::UndefinedCvi, "coincident centroids with zero spread (0/0)");
        ratio = std::numeric_limits<double>::infinity();
      } else {
        ratio = num / den;
      }
      worst = std::max(worst, ratio);
    }
    total += worst;
  }
  return total / static_cast<double>(k);
}

double rand_index(const Partition& u, const Partition& v) {
  const auto t = contingency(u, v);
  std::int64_t same_both = 0;
  for (const auto c : t.cells) same_both += c2(c);
  std::int64_t same_u = 0;
  for (const auto r : t.rows) same_u += c2(r);
  std::int64_t same_v = 0;
  for (const auto c : t.cols) same_v += c2(c);
  const std::int64_t pairs = c2(t.n);
  const std::int64_t different_both = pairs - same_u - same_v + same_both;
  return static_cast<double>(same_both + different_both) / static_cast<double>(pairs);
}

double adjusted_rand_index(const Partition& u, const Partition& v) {
  const auto t = contingency(u, v);
  // Scaled by C(n,2) so everything stays integral until the final division.
  using Wide = __int128;
  std::int64_t index = 0;
  for (const auto c : t.cells) index += c2(c);
  std::int64_t sum_a = 0;
  for (const auto r : t.rows) sum_a += c2(r);
  std::int64_t sum_b = 0;
  for (const auto c : t.cols) sum_b += c2(c);
  const Wide pairs = c2(t.n);
  const Wide num = 2 * (Wide{index} * pairs - Wide{sum_a} * sum_b);
  const Wide den = (Wide{sum_a} + sum_b) * pairs - 2 * Wide{sum_a} * sum_b;
  if (den == 0) return 1.0;
  return static_cast<double>(num) / static_cast<double>(den);
}

namespace {

template <typename SilFn>
CviScores scores_impl(const Matrix& x, const Partition& p, SilFn&& sil) {
  CviScores s{std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  try {
    s.sil = sil();
  } catch (const Error& e) {
    if (e.code() != ErrorCode::UndefinedCvi) throw;
  }
  try {
    s.dbs = davies_bouldin(x, p);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::UndefinedCvi) throw;
  }
  return s;
}

}  // namespace

CviScores internal_scores(const Matrix& x, const Partition& p) {
  return scores_impl(x, p, [&] { return silhouette(x, p); });
}

CviScores internal_scores(const Matrix& x, const Matrix& distances, const Partition& p) {
  return scores_impl(x, p, [&] { return silhouette_precomputed(distances, p); });
}

}  // namespace poac::cvi
