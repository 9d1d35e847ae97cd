#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <list>
#include <memory>
#include <mutex>
#include <numeric>

#include "poac/estimators.hpp"
#include "poac/kernels.hpp"

namespace poac::estimators {
namespace {

constexpr int kMiniBatchEpochs = 100;

double sq_dist(const Matrix& a, Eigen::Index i, const Matrix& b, Eigen::Index j) {
  return (a.row(i) - b.row(j)).squaredNorm();
}

Matrix init_plus_plus(const Matrix& x, int k, RngStream& rng) {
  const auto n = x.rows();
  Matrix centers(k, x.cols());
  std::vector<double> d2(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  std::vector<char> chosen(static_cast<std::size_t>(n), 0);
  auto idx = static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(n)));
  for (int c = 0; c < k; ++c) {
    if (c > 0) {
      const double total = kernels::ordered_sum(d2);
      if (total > 0.0) {
        const double target = rng.uniform() * total;
        double cum = 0.0;
        idx = n - 1;
        for (Eigen::Index i = 0; i < n; ++i) {
          cum += d2[static_cast<std::size_t>(i)];
          if (cum > target && d2[static_cast<std::size_t>(i)] > 0.0) {
            idx = i;
            break;
          }
        }
      } else {
        idx = 0;
        while (idx < n - 1 && chosen[static_cast<std::size_t>(idx)]) ++idx;
      }
    }
    chosen[static_cast<std::size_t>(idx)] = 1;
    centers.row(c) = x.row(idx);
    for (Eigen::Index i = 0; i < n; ++i) {
      d2[static_cast<std::size_t>(i)] = std::min(d2[static_cast<std::size_t>(i)], sq_dist(x, i, centers, c));
    }
  }
  return centers;
}

Matrix init_random(const Matrix& x, int k, RngStream& rng) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(x.rows()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  Matrix centers(k, x.cols());
  for (int c = 0; c < k; ++c) {
    const auto j = static_cast<std::size_t>(c) + rng.uniform_index(idx.size() - static_cast<std::size_t>(c));
    std::swap(idx[static_cast<std::size_t>(c)], idx[j]);
    centers.row(c) = x.row(idx[static_cast<std::size_t>(c)]);
  }
  return centers;
}

KMeansResult lloyd(const Matrix& x, Matrix centers, const Deadline& deadline) {
  const auto n = x.rows();
  const auto k = centers.rows();
  KMeansResult r;
  r.labels.assign(static_cast<std::size_t>(n), 0);
  std::vector<double> d2(static_cast<std::size_t>(n));
  for (int iter = 0; iter < kKMeansMaxIter; ++iter) {
    kernels::assign_nearest(x, centers, r.labels, d2);
    const double inertia = kernels::ordered_sum(d2);
    const bool converged =
        !r.inertia_history.empty() && r.inertia_history.back() - inertia <= kKMeansTol * r.inertia_history.back();
    r.inertia_history.push_back(inertia);
    r.inertia = inertia;
    if (converged) break;

    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (const int l : r.labels) ++counts[static_cast<std::size_t>(l)];
    // Empty clusters take the points farthest from their centroids.
    for (Eigen::Index c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) continue;
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < d2.size(); ++i) {
        if (d2[i] > far_d && counts[static_cast<std::size_t>(r.labels[i])] > 1) {
          far_d = d2[i];
          far = i;
        }
      }
      if (far_d < 0.0) break;
      --counts[static_cast<std::size_t>(r.labels[far])];
      r.labels[far] = static_cast<int>(c);
      d2[far] = 0.0;
      counts[static_cast<std::size_t>(c)] = 1;
    }
    centers.setZero();
    for (Eigen::Index i = 0; i < n; ++i) centers.row(r.labels[static_cast<std::size_t>(i)]) += x.row(i);
    for (Eigen::Index c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) centers.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
    }
    deadline.check();
  }
  r.centroids = std::move(centers);
  return r;
}

void check_k(int k, Eigen::Index n) {
  if (k < 1) throw Error(ErrorCode::InvalidInput, "number of clusters must be >= 1");
  if (k > n) {
    throw Error(ErrorCode::InfeasibleK, "k=" + std::to_string(k) + " exceeds n=" + std::to_string(n));
  }
}

}  // namespace

KMeansResult kmeans(const Matrix& x, int k, KMeansInit init, RngStream& rng, int restarts,
                    const Deadline& deadline) {
  check_k(k, x.rows());
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    RngStream run_rng = rng.derive(static_cast<std::uint64_t>(r));
    Matrix centers = init == KMeansInit::PlusPlus ? init_plus_plus(x, k, run_rng) : init_random(x, k, run_rng);
    auto result = lloyd(x, std::move(centers), deadline);
    if (result.inertia < best.inertia) best = std::move(result);
  }
  return best;
}

KMeansResult minibatch_kmeans(const Matrix& x, int k, int batch_size, RngStream& rng,
                              const Deadline& deadline) {
  check_k(k, x.rows());
  if (batch_size < 1) throw Error(ErrorCode::InvalidInput, "batch_size must be >= 1");
  const auto n = x.rows();
  RngStream init_rng = rng.derive(0);
  Matrix centers = init_plus_plus(x, k, init_rng);
  std::vector<double> counts(static_cast<std::size_t>(k), 0.0);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  RngStream batch_rng = rng.derive(1);

  KMeansResult r;
  r.labels.assign(static_cast<std::size_t>(n), 0);
  std::vector<double> d2(static_cast<std::size_t>(n));
  const auto batch = std::min<Eigen::Index>(batch_size, n);
  for (int epoch = 0; epoch < kMiniBatchEpochs; ++epoch) {
    batch_rng.shuffle(std::span<Eigen::Index>(order));
    for (Eigen::Index start = 0; start < n; start += batch) {
      const auto end = std::min(start + batch, n);
      std::vector<int> nearest(static_cast<std::size_t>(end - start));
      for (Eigen::Index t = start; t < end; ++t) {
        const auto i = order[static_cast<std::size_t>(t)];
        double best_d = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c) {
          const double d = sq_dist(x, i, centers, c);
          if (d < best_d) {
            best_d = d;
            nearest[static_cast<std::size_t>(t - start)] = c;
          }
        }
      }
      for (Eigen::Index t = start; t < end; ++t) {
        const auto i = order[static_cast<std::size_t>(t)];
        const auto c = nearest[static_cast<std::size_t>(t - start)];
        counts[static_cast<std::size_t>(c)] += 1.0;
        centers.row(c) += (x.row(i) - centers.row(c)) / counts[static_cast<std::size_t>(c)];
      }
    }
    kernels::assign_nearest(x, centers, r.labels, d2);
    const double inertia = kernels::ordered_sum(d2);
    const bool converged =
        !r.inertia_history.empty() && r.inertia_history.back() - inertia <= kKMeansTol * r.inertia_history.back();
    r.inertia_history.push_back(inertia);
    r.inertia = inertia;
    if (converged) break;
    deadline.check();
  }
  r.centroids = std::move(centers);
  return r;
}

DbscanResult dbscan(const Matrix& x, double eps, int min_samples) {
  if (!(eps > 0.0)) throw Error(ErrorCode::InvalidInput, "eps must be positive");
  const auto neighbors = kernels::radius_neighbors(x, eps);
  const auto n = neighbors.size();
  DbscanResult r;
  r.raw_labels.assign(n, -1);
  r.core.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    r.core[i] = static_cast<int>(neighbors[i].size()) >= min_samples ? 1 : 0;
  }
  int next = 0;
  std::deque<std::size_t> queue;
  for (std::size_t i = 0; i < n; ++i) {
    if (!r.core[i] || r.raw_labels[i] != -1) continue;
    const int id = next++;
    r.raw_labels[i] = id;
    queue.push_back(i);
    while (!queue.empty()) {
      const auto q = queue.front();
      queue.pop_front();
      for (const int nb : neighbors[q]) {
        const auto j = static_cast<std::size_t>(nb);
        if (r.raw_labels[j] != -1) continue;
        r.raw_labels[j] = id;
        if (r.core[j]) queue.push_back(j);
      }
    }
  }
  return r;
}

Partition resolve_noise(const Matrix& x, const std::vector<int>& raw_labels) {
  const int clusters = raw_labels.empty() ? 0 : *std::max_element(raw_labels.begin(), raw_labels.end()) + 1;
  if (clusters == 0) return canonicalize(raw_labels, NoisePolicy::Singletons);
  Matrix centroids = Matrix::Zero(clusters, x.cols());
  std::vector<double> counts(static_cast<std::size_t>(clusters), 0.0);
  for (std::size_t i = 0; i < raw_labels.size(); ++i) {
    if (raw_labels[i] < 0) continue;
    centroids.row(raw_labels[i]) += x.row(static_cast<Eigen::Index>(i));
    counts[static_cast<std::size_t>(raw_labels[i])] += 1.0;
  }
  for (int c = 0; c < clusters; ++c) centroids.row(c) /= counts[static_cast<std::size_t>(c)];
  std::vector<int> labels = raw_labels;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= 0) continue;
    double best = std::numeric_limits<double>::infinity();
    for (int c = 0; c < clusters; ++c) {
      const double d = sq_dist(x, static_cast<Eigen::Index>(i), centroids, c);
      if (d < best) {
        best = d;
        labels[i] = c;
      }
    }
  }
  return canonicalize(labels);
}

WardResult ward(const Matrix& x, int n_clusters, const Deadline& deadline) {
  const auto n = x.rows();
  check_k(n_clusters, n);
  // Squared Ward distances, updated in place by Lance-Williams.
  Matrix d = kernels::pairwise_distances(x).array().square().matrix();
  std::vector<double> size(static_cast<std::size_t>(n), 1.0);
  std::vector<char> active(static_cast<std::size_t>(n), 1);
  struct Merge {
    Eigen::Index a;
    Eigen::Index b;
    double height;
  };
  std::vector<Merge> merges;
  merges.reserve(static_cast<std::size_t>(n));
  std::vector<Eigen::Index> chain;
  Eigen::Index remaining = n;

  while (remaining > 1) {
    if (chain.empty()) {
      Eigen::Index first = 0;
      while (!active[static_cast<std::size_t>(first)]) ++first;
      chain.push_back(first);
    }
    const auto a = chain.back();
    const Eigen::Index prev = chain.size() >= 2 ? chain[chain.size() - 2] : -1;
    Eigen::Index b = -1;
    double best = std::numeric_limits<double>::infinity();
    if (prev >= 0) {
      b = prev;
      best = d(a, prev);
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == a || !active[static_cast<std::size_t>(j)]) continue;
      if (d(a, j) < best) {
        best = d(a, j);
        b = j;
      }
    }
    if (b != prev) {
      chain.push_back(b);
      continue;
    }
    chain.pop_back();
    chain.pop_back();
    const auto keep = std::min(a, b);
    const auto drop = std::max(a, b);
    merges.push_back({keep, drop, std::sqrt(std::max(best, 0.0))});
    const double na = size[static_cast<std::size_t>(keep)];
    const double nb = size[static_cast<std::size_t>(drop)];
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!active[static_cast<std::size_t>(j)] || j == keep || j == drop) continue;
      const double nj = size[static_cast<std::size_t>(j)];
      const double v = ((na + nj) * d(keep, j) + (nb + nj) * d(drop, j) - nj * best) / (na + nb + nj);
      d(keep, j) = v;
      d(j, keep) = v;
    }
    size[static_cast<std::size_t>(keep)] = na + nb;
    active[static_cast<std::size_t>(drop)] = 0;
    --remaining;
    if (remaining % 64 == 0) deadline.check();
  }

  std::stable_sort(merges.begin(), merges.end(),
                   [](const Merge& l, const Merge& r) { return l.height < r.height; });
  std::vector<Eigen::Index> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), Eigen::Index{0});
  auto find = [&](Eigen::Index i) {
    while (parent[static_cast<std::size_t>(i)] != i) {
      parent[static_cast<std::size_t>(i)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(i)])];
      i = parent[static_cast<std::size_t>(i)];
    }
    return i;
  };
  WardResult r;
  for (const auto& m : merges) r.merge_heights.push_back(m.height);
  const auto cut = static_cast<std::size_t>(n - n_clusters);
  for (std::size_t t = 0; t < cut; ++t) {
    const auto ra = find(merges[t].a);
    const auto rb = find(merges[t].b);
    parent[static_cast<std::size_t>(std::max(ra, rb))] = std::min(ra, rb);
  }
  std::vector<int> roots(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) roots[static_cast<std::size_t>(i)] = static_cast<int>(find(i));
  r.labels = canonicalize(roots).assignments;
  return r;
}

namespace {

// Tridiagonal LU with partial pivoting (the dgttrf/dgttrs scheme), used for
// inverse iteration on T - shift*I.
class TridiagonalSolver {
 public:
  TridiagonalSolver(const Eigen::VectorXd& d, const Eigen::VectorXd& e, double shift, double tiny)
      : n_(d.size()), dl_(e), d_(d.array() - shift), du_(e), du2_(Eigen::VectorXd::Zero(std::max<Eigen::Index>(n_ - 2, 0))),
        swap_(static_cast<std::size_t>(n_), 0) {
    for (Eigen::Index i = 0; i + 1 < n_; ++i) {
      if (std::abs(d_(i)) >= std::abs(dl_(i))) {
        if (d_(i) == 0.0) d_(i) = tiny;
        const double f = dl_(i) / d_(i);
        dl_(i) = f;
        d_(i + 1) -= f * du_(i);
      } else {
        const double f = d_(i) / dl_(i);
        d_(i) = dl_(i);
        dl_(i) = f;
        const double t = du_(i);
        du_(i) = d_(i + 1);
        d_(i + 1) = t - f * d_(i + 1);
        if (i + 2 < n_) {
          du2_(i) = du_(i + 1);
          du_(i + 1) = -f * du_(i + 1);
        }
        swap_[static_cast<std::size_t>(i)] = 1;
      }
    }
    for (Eigen::Index i = 0; i < n_; ++i)
      if (d_(i) == 0.0) d_(i) = tiny;
  }

  void solve(Eigen::VectorXd& b) const {
    for (Eigen::Index i = 0; i + 1 < n_; ++i) {
      if (swap_[static_cast<std::size_t>(i)]) std::swap(b(i), b(i + 1));
      b(i + 1) -= dl_(i) * b(i);
    }
    for (Eigen::Index i = n_ - 1; i >= 0; --i) {
      double v = b(i);
      if (i + 1 < n_) v -= du_(i) * b(i + 1);
      if (i + 2 < n_) v -= du2_(i) * b(i + 2);
      b(i) = v / d_(i);
    }
  }

 private:
  Eigen::Index n_;
  Eigen::VectorXd dl_, d_, du_, du2_;
  std::vector<char> swap_;
};

}  // namespace

EigenPairs smallest_eigenpairs(const Eigen::MatrixXd& a, int count) {
  const auto n = a.rows();
  if (a.cols() != n || count < 1 || count > n) throw Error(ErrorCode::ShapeError, "bad eigenproblem shape");
  EigenPairs out;
  if (n == 1) {
    out.values = a.diagonal();
    out.vectors = Eigen::MatrixXd::Ones(1, 1);
    return out;
  }
  const Eigen::Tridiagonalization<Eigen::MatrixXd> tri(a);
  const Eigen::VectorXd d = tri.diagonal();
  const Eigen::VectorXd e = tri.subDiagonal();

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  double max_e2 = 1.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = (i > 0 ? std::abs(e(i - 1)) : 0.0) + (i + 1 < n ? std::abs(e(i)) : 0.0);
    lo = std::min(lo, d(i) - r);
    hi = std::max(hi, d(i) + r);
    if (i + 1 < n) max_e2 = std::max(max_e2, e(i) * e(i));
  }
  const double eps = std::numeric_limits<double>::epsilon();
  const double norm = std::max({std::abs(lo), std::abs(hi), std::numeric_limits<double>::min()});
  const double pivmin = std::numeric_limits<double>::min() * max_e2;
  lo -= 2 * eps * norm;
  hi += 2 * eps * norm;

  // Number of eigenvalues below x (Sturm sequence of the LDL^T pivots).
  const auto below = [&](double x) {
    int c = 0;
    double q = d(0) - x;
    for (Eigen::Index i = 0;; ++i) {
      if (std::abs(q) < pivmin) q = -pivmin;
      c += q < 0.0;
      if (i + 1 == n) break;
      q = d(i + 1) - x - e(i) * e(i) / q;
    }
    return c;
  };

  out.values.resize(count);
  for (int j = 0; j < count; ++j) {
    double l = lo, u = hi;
    for (int it = 0; it < 200 && u - l > 2 * eps * std::max(std::abs(l), std::abs(u)) + pivmin; ++it) {
      const double mid = 0.5 * (l + u);
      (below(mid) > j ? u : l) = mid;
    }
    out.values(j) = 0.5 * (l + u);
  }

  Eigen::MatrixXd z(n, count);
  const double sep = 10 * eps * norm;
  double shift = 0.0;
  for (int j = 0; j < count; ++j) {
    shift = j > 0 && out.values(j) - shift < sep ? shift + sep : out.values(j);
    const TridiagonalSolver solver(d, e, shift, eps * norm);
    Eigen::VectorXd v(n);
    RngStream start(0x5EC7, static_cast<std::uint64_t>(j));
    for (Eigen::Index i = 0; i < n; ++i) v(i) = start.uniform(-1.0, 1.0);
    for (int it = 0; it < 5; ++it) {
      solver.solve(v);
      for (int pass = 0; pass < 2; ++pass)
        for (int t = 0; t < j; ++t) v -= z.col(t).dot(v) * z.col(t);
      const double nv = v.norm();
      if (!(nv > 0.0) || !std::isfinite(nv)) throw Error(ErrorCode::SolverError, "inverse iteration failed");
      v /= nv;
    }
    z.col(j) = v;
  }
  out.vectors = tri.matrixQ() * z;
  return out;
}

namespace {

class EmbeddingCache {
 public:
  std::shared_ptr<const EigenPairs> find(const Matrix& x, Affinity affinity, int count) {
    std::lock_guard<std::mutex> lock(mutex_);
    for (auto it = entries_.begin(); it != entries_.end(); ++it) {
      if (it->affinity == affinity && it->count == count && it->x.rows() == x.rows() &&
          it->x.cols() == x.cols() && it->x == x) {
        auto hit = it->pairs;
        entries_.splice(entries_.begin(), entries_, it);
        return hit;
      }
    }
    return nullptr;
  }

  void insert(const Matrix& x, Affinity affinity, int count, std::shared_ptr<const EigenPairs> pairs) {
    std::lock_guard<std::mutex> lock(mutex_);
    entries_.push_front({x, affinity, count, std::move(pairs)});
    if (entries_.size() > kCapacity) entries_.pop_back();
  }

 private:
  struct Entry {
    Matrix x;
    Affinity affinity;
    int count;
    std::shared_ptr<const EigenPairs> pairs;
  };
  static constexpr std::size_t kCapacity = 16;
  std::mutex mutex_;
  std::list<Entry> entries_;
};

EmbeddingCache& embedding_cache() {
  static EmbeddingCache cache;
  return cache;
}

}  // namespace

SpectralResult spectral(const Matrix& x, int n_clusters, Affinity affinity, RngStream& rng,
                        const Deadline& deadline) {
  const auto n = x.rows();
  check_k(n_clusters, n);
  if (n > kSpectralMaxRows) {
    throw Error(ErrorCode::SolverError, "dense spectral embedding limited to " +
                                            std::to_string(kSpectralMaxRows) + " rows");
  }
  SpectralResult r;
  const Matrix dist = kernels::pairwise_distances(x);
  if (affinity == Affinity::Rbf) {
    const double gamma = 1.0 / static_cast<double>(x.cols());
    r.affinity = (-gamma * dist.array().square()).exp().matrix();
  } else {
    const auto m = std::min<Eigen::Index>(kSpectralNeighbors, n);
    Matrix conn = Matrix::Zero(n, n);
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      std::iota(idx.begin(), idx.end(), Eigen::Index{0});
      std::partial_sort(idx.begin(), idx.begin() + m, idx.end(), [&](Eigen::Index a, Eigen::Index b) {
        const double da = dist(i, a);
        const double db = dist(i, b);
        return da < db || (da == db && a < b);
      });
      for (Eigen::Index t = 0; t < m; ++t) conn(i, idx[static_cast<std::size_t>(t)]) = 1.0;
    }
    r.affinity = 0.5 * (conn + conn.transpose());
  }
  deadline.check();

  const int count = static_cast<int>(std::min<Eigen::Index>(n, std::max(kSpectralEigenpairs, n_clusters)));
  auto eig = embedding_cache().find(x, affinity, count);
  if (!eig) {
    const Eigen::VectorXd degree = r.affinity.rowwise().sum();
    Eigen::VectorXd inv_sqrt(n);
    for (Eigen::Index i = 0; i < n; ++i) inv_sqrt(i) = degree(i) > 0.0 ? 1.0 / std::sqrt(degree(i)) : 0.0;
    Eigen::MatrixXd laplacian = -(inv_sqrt.asDiagonal() * r.affinity * inv_sqrt.asDiagonal());
    laplacian.diagonal().array() += 1.0;
    laplacian = 0.5 * (laplacian + laplacian.transpose()).eval();
    eig = std::make_shared<const EigenPairs>(smallest_eigenpairs(laplacian, count));
    embedding_cache().insert(x, affinity, count, eig);
  }
  deadline.check();
  r.laplacian_eigenvalues = eig->values;

  Matrix embedding = eig->vectors.leftCols(n_clusters);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double norm = embedding.row(i).norm();
    if (norm > 0.0) embedding.row(i) /= norm;
  }
  r.labels = kmeans(embedding, n_clusters, KMeansInit::PlusPlus, rng, kKMeansRestarts, deadline).labels;
  return r;
}

Partition cluster(const OperatorConfig& op, const Matrix& x, RngStream& rng, const Deadline& deadline) {
  if (!is_clusterer(op.kind)) {
    throw Error(ErrorCode::InvalidInput, std::string(to_string(op.kind)) + " is not a clusterer");
  }
  if (x.rows() < 2) throw Error(ErrorCode::InvalidInput, "need at least 2 rows");
  if (!x.allFinite()) throw Error(ErrorCode::InvalidInput, "non-finite input");
  switch (op.kind) {
    case OperatorKind::KMeans: {
      const auto init = op.get_name("init") == "random" ? KMeansInit::Random : KMeansInit::PlusPlus;
      return canonicalize(kmeans(x, static_cast<int>(op.get_int("n_clusters")), init, rng,
                                 kKMeansRestarts, deadline).labels);
    }
    case OperatorKind::MiniBatchKMeans:
      return canonicalize(minibatch_kmeans(x, static_cast<int>(op.get_int("n_clusters")),
                                           static_cast<int>(op.get_int("batch_size")), rng, deadline)
                              .labels);
    case OperatorKind::DBSCAN:
      return resolve_noise(x, dbscan(x, op.get_real("eps"), static_cast<int>(op.get_int("min_samples"))).raw_labels);
    case OperatorKind::Agglomerative:
      return canonicalize(ward(x, static_cast<int>(op.get_int("n_clusters")), deadline).labels);
    case OperatorKind::Spectral: {
      const auto aff = op.get_name("affinity") == "rbf" ? Affinity::Rbf : Affinity::NearestNeighbors;
      return canonicalize(spectral(x, static_cast<int>(op.get_int("n_clusters")), aff, rng, deadline).labels);
    }
    default: break;
  }
  throw Error(ErrorCode::InvalidInput, "unsupported clusterer");
}

}  // namespace poac::estimators
