#pragma once

// Data-parallel inner loops shared by the CVI, meta-feature and clustering
// code. Each kernel has an OpenMP version and a serial reference with the same
// per-element arithmetic, so the two agree bit-for-bit and results do not
// depend on the thread count.

#include <span>
#include <vector>

#include "poac/core.hpp"

namespace poac::kernels {

/// Dense n x n Euclidean distance matrix.
Matrix pairwise_distances(const Matrix& x);

/// Per-point silhouette values from a precomputed distance matrix. Points in
/// singleton clusters get 0. Partition must be canonical with k >= 2.
std::vector<double> silhouette_samples(const Matrix& distances, const Partition& p);

/// Same as above, computing distances on the fly (no n x n storage).
std::vector<double> silhouette_samples_direct(const Matrix& x, const Partition& p);

/// Index of the nearest centroid for every row (lowest index wins ties) and the
/// squared distance to it.
void assign_nearest(const Matrix& x, const Matrix& centroids, std::span<int> labels,
                    std::span<double> sq_dist);

/// For each row, the indices j with ||x_i - x_j|| <= eps (self included).
std::vector<std::vector<int>> radius_neighbors(const Matrix& x, double eps);

/// Fixed-order sum; used wherever parallel partial results are reduced.
double ordered_sum(std::span<const double> values);

namespace reference {

Matrix pairwise_distances(const Matrix& x);
std::vector<double> silhouette_samples(const Matrix& distances, const Partition& p);
void assign_nearest(const Matrix& x, const Matrix& centroids, std::span<int> labels,
                    std::span<double> sq_dist);
std::vector<std::vector<int>> radius_neighbors(const Matrix& x, double eps);

}  // namespace reference

}  // namespace poac::kernels
