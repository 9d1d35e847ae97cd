#pragma once

#include "poac/core.hpp"

namespace poac::cvi {

/// Mean silhouette with Euclidean distances. Points in singleton clusters
/// contribute 0. Throws UndefinedCvi unless 2 <= k <= n-1.
double silhouette(const Matrix& x, const Partition& p);
inline double silhouette(const Dataset& d, const Partition& p) { return silhouette(d.features, p); }

/// Silhouette from a precomputed n x n distance matrix.
double silhouette_precomputed(const Matrix& distances, const Partition& p);

/// Davies-Bouldin score (lower is better). Throws UndefinedCvi for k < 2 or
/// when two clusters share a centroid and both have zero spread; returns +inf
/// when coincident centroids have positive spread.
double davies_bouldin(const Matrix& x, const Partition& p);
inline double davies_bouldin(const Dataset& d, const Partition& p) { return davies_bouldin(d.features, p); }

/// Rand index over all C(n,2) pairs. Ids need not be canonical.
double rand_index(const Partition& u, const Partition& v);

/// Hubert-Arabie adjusted Rand index. Returns 1 when the chance-corrected
/// denominator vanishes (both partitions the same trivial partition).
double adjusted_rand_index(const Partition& u, const Partition& v);

struct CviScores {
  double sil;  // NaN when undefined
  double dbs;  // NaN when undefined, +inf for coincident centroids
};

/// Both internal CVIs with undefined cases mapped to NaN instead of throwing.
CviScores internal_scores(const Matrix& x, const Partition& p);
CviScores internal_scores(const Matrix& x, const Matrix& distances, const Partition& p);

}  // namespace poac::cvi
