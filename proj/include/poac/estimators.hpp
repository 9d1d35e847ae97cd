#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "poac/core.hpp"
#include "poac/rng.hpp"

namespace poac::estimators {

enum class OperatorKind {
  MinMaxScaler,
  Normalizer,
  StandardScaler,
  VarianceThreshold,
  PCA,
  FastICA,
  KMeans,
  MiniBatchKMeans,
  DBSCAN,
  Agglomerative,
  Spectral,
};

std::string_view to_string(OperatorKind kind);
OperatorKind kind_from_string(std::string_view name);
bool is_clusterer(OperatorKind kind);

/// Grid values are integers, reals or names.
using HyperValue = std::variant<std::int64_t, double, std::string>;

struct OperatorConfig {
  OperatorKind kind;
  std::map<std::string, HyperValue> hyperparameters;

  std::int64_t get_int(const std::string& name) const;
  double get_real(const std::string& name) const;
  const std::string& get_name(const std::string& name) const;

  bool operator==(const OperatorConfig&) const = default;
};

/// 0-3 preprocessing steps followed by exactly one clusterer.
class PipelineSpec {
 public:
  /// Throws InvalidInput when the invariants do not hold.
  explicit PipelineSpec(std::vector<OperatorConfig> steps);

  const std::vector<OperatorConfig>& steps() const noexcept { return steps_; }
  std::size_t complexity() const noexcept { return steps_.size(); }
  const OperatorConfig& clusterer() const { return steps_.back(); }

  bool operator==(const PipelineSpec&) const = default;

  static constexpr std::size_t kMaxSteps = 4;

 private:
  std::vector<OperatorConfig> steps_;
};

struct ParamGrid {
  std::string name;
  std::vector<HyperValue> values;
};

struct OperatorDef {
  OperatorKind kind;
  std::vector<ParamGrid> grids;
};

/// The searchable operators and their hyperparameter grids.
struct OperatorSpace {
  std::vector<OperatorDef> preprocessors;
  std::vector<OperatorDef> clusterers;

  /// Every operator with its full grid.
  static OperatorSpace full();
  /// KMeans only, n_clusters in [k_lo, k_hi], k-means++ init.
  static OperatorSpace kmeans_only(int k_lo, int k_hi);

  const OperatorDef& def(OperatorKind kind) const;
  /// Number of distinct single-step pipelines (clusterer configurations).
  std::size_t clusterer_configurations() const;
};

/// Throws InvalidInput if a hyperparameter is missing or off-grid.
void validate(const OperatorConfig& op, const OperatorSpace& space);

/// Cooperative wall-clock guard. Long loops call check(), which throws Timeout.
class Deadline {
 public:
  Deadline() = default;
  explicit Deadline(std::chrono::duration<double> budget)
      : end_(std::chrono::steady_clock::now() +
             std::chrono::duration_cast<std::chrono::steady_clock::duration>(budget)) {}
  void check() const;

 private:
  std::optional<std::chrono::steady_clock::time_point> end_;
};

/// Applies one preprocessing step. Throws InvalidInput for non-finite input.
Matrix fit_transform(const OperatorConfig& op, const Matrix& x, RngStream& rng);

/// Runs one clusterer; the returned partition is canonical.
Partition cluster(const OperatorConfig& op, const Matrix& x, RngStream& rng,
                  const Deadline& deadline = {});

/// Preprocess then cluster; partition indexes the original rows.
Partition apply_pipeline(const PipelineSpec& pipeline, const Matrix& x, RngStream& rng,
                         const Deadline& deadline = {});
inline Partition apply_pipeline(const PipelineSpec& pipeline, const Dataset& d, RngStream& rng,
                                const Deadline& deadline = {}) {
  return apply_pipeline(pipeline, d.features, rng, deadline);
}

// Algorithm entry points with diagnostics, used by cluster() and by tests.

enum class KMeansInit { PlusPlus, Random };

struct KMeansResult {
  std::vector<int> labels;
  Matrix centroids;
  double inertia = 0.0;
  std::vector<double> inertia_history;  // of the winning restart
};

inline constexpr int kKMeansRestarts = 10;
inline constexpr int kKMeansMaxIter = 300;
inline constexpr double kKMeansTol = 1e-4;

KMeansResult kmeans(const Matrix& x, int k, KMeansInit init, RngStream& rng,
                    int restarts = kKMeansRestarts, const Deadline& deadline = {});

KMeansResult minibatch_kmeans(const Matrix& x, int k, int batch_size, RngStream& rng,
                              const Deadline& deadline = {});

struct DbscanResult {
  std::vector<int> raw_labels;  // -1 for noise
  std::vector<char> core;
};

DbscanResult dbscan(const Matrix& x, double eps, int min_samples);

/// Noise policy: reassign noise to the nearest non-noise centroid, or make
/// every point a singleton when everything is noise.
Partition resolve_noise(const Matrix& x, const std::vector<int>& raw_labels);

struct WardResult {
  std::vector<int> labels;
  std::vector<double> merge_heights;  // non-decreasing, n-1 entries
};

WardResult ward(const Matrix& x, int n_clusters, const Deadline& deadline = {});

enum class Affinity { Rbf, NearestNeighbors };

/// Largest row count for the dense eigensolver used by spectral clustering.
inline constexpr Eigen::Index kSpectralMaxRows = 2000;
inline constexpr int kSpectralNeighbors = 10;
/// Eigenpairs computed per embedding; the first n_clusters are used. Embeddings
/// of recently seen inputs are memoized, so a change of n_clusters is cheap.
inline constexpr int kSpectralEigenpairs = 22;

struct SpectralResult {
  std::vector<int> labels;
  Matrix affinity;
  Eigen::VectorXd laplacian_eigenvalues;  // the min(n, max(22, n_clusters)) smallest
};

SpectralResult spectral(const Matrix& x, int n_clusters, Affinity affinity, RngStream& rng,
                        const Deadline& deadline = {});

struct EigenPairs {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // one orthonormal column per value
};

/// The `count` smallest eigenpairs of a dense symmetric matrix: Householder
/// tridiagonalization, Sturm bisection for the values, inverse iteration for
/// the vectors.
EigenPairs smallest_eigenpairs(const Eigen::MatrixXd& a, int count);

/// PCA projection plus diagnostics.
Matrix pca(const Matrix& x, int components);
Matrix fast_ica(const Matrix& x, int components, RngStream& rng);

/// Stable-key JSON: {"steps":[{"kind":..,"hyperparameters":{..}}]}.
nlohmann::json to_json(const PipelineSpec& p);
PipelineSpec pipeline_from_json(const nlohmann::json& j);
/// Compact single-line key, used for caching and ordering.
std::string pipeline_key(const PipelineSpec& p);

}  // namespace poac::estimators
