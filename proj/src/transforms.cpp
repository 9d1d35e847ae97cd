#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

#include "poac/estimators.hpp"

namespace poac::estimators {
namespace {

constexpr int kIcaMaxIter = 200;
constexpr double kIcaTol = 1e-4;

Matrix min_max(const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double lo = x.col(j).minCoeff();
    const double range = x.col(j).maxCoeff() - lo;
    if (range > 0.0) {
      out.col(j) = (x.col(j).array() - lo) / range;
    } else {
      out.col(j).setZero();
    }
  }
  return out;
}

Eigen::RowVectorXd population_variance(const Matrix& x) {
  const Eigen::RowVectorXd mean = x.colwise().mean();
  return (x.rowwise() - mean).array().square().colwise().sum() / static_cast<double>(x.rows());
}

Matrix standardize(const Matrix& x) {
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Eigen::RowVectorXd sd = population_variance(x).array().sqrt();
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    if (sd(j) > 0.0) {
      out.col(j) = (x.col(j).array() - mean(j)) / sd(j);
    } else {
      out.col(j).setZero();
    }
  }
  return out;
}

Matrix normalize_rows(const Matrix& x, const std::string& norm) {
  if (norm != "l1" && norm != "l2") throw Error(ErrorCode::InvalidInput, "norm must be l1 or l2");
  Matrix out = x;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double s = norm == "l1" ? x.row(i).lpNorm<1>() : x.row(i).norm();
    if (s > 0.0) out.row(i) /= s;
  }
  return out;
}

Matrix variance_threshold(const Matrix& x, double threshold) {
  const Eigen::RowVectorXd var = population_variance(x);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    if (var(j) > threshold) keep.push_back(j);
  }
  if (keep.empty()) {
    Eigen::Index best = 0;
    var.maxCoeff(&best);
    keep.push_back(best);
  }
  Matrix out(x.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = x.col(keep[c]);
  return out;
}

int clip_components(const Matrix& x, std::int64_t requested) {
  const auto cap = std::min<std::int64_t>(x.rows() - 1, x.cols());
  return static_cast<int>(std::max<std::int64_t>(1, std::min(requested, cap)));
}

// Top eigenpairs of the sample covariance, largest first, sign-fixed so the
// largest-magnitude loading of every component is positive.
void principal_axes(const Matrix& centered, int c, Eigen::MatrixXd& axes, Eigen::VectorXd& variances) {
  const double denom = static_cast<double>(centered.rows() - 1);
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / denom;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw Error(ErrorCode::SolverError, "covariance eigensolver failed");
  const auto p = cov.rows();
  axes.resize(p, c);
  variances.resize(c);
  for (int t = 0; t < c; ++t) {
    const auto src = p - 1 - t;
    Eigen::VectorXd v = eig.eigenvectors().col(src);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    axes.col(t) = v;
    variances(t) = eig.eigenvalues()(src);
  }
}

Matrix symmetric_decorrelation(const Eigen::MatrixXd& w) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(w * w.transpose());
  const Eigen::VectorXd inv_sqrt = eig.eigenvalues().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  return eig.eigenvectors() * inv_sqrt.asDiagonal() * eig.eigenvectors().transpose() * w;
}

}  // namespace

Matrix pca(const Matrix& x, int components) {
  const int c = clip_components(x, components);
  const Matrix centered = x.rowwise() - x.colwise().mean();
  Eigen::MatrixXd axes;
  Eigen::VectorXd variances;
  principal_axes(centered, c, axes, variances);
  return centered * axes;
}

Matrix fast_ica(const Matrix& x, int components, RngStream& rng) {
  int c = clip_components(x, components);
  const Matrix centered = x.rowwise() - x.colwise().mean();
  Eigen::MatrixXd axes;
  Eigen::VectorXd variances;
  principal_axes(centered, c, axes, variances);
  // Drop numerically null directions before whitening.
  const double floor = std::max(variances(0), 0.0) * 1e-12;
  int rank = 0;
  while (rank < c && variances(rank) > floor && variances(rank) > 0.0) ++rank;
  if (rank == 0) return Matrix::Zero(x.rows(), 1);
  c = rank;
  const Eigen::MatrixXd whitening =
      axes.leftCols(c) * variances.head(c).cwiseSqrt().cwiseInverse().asDiagonal();
  const Matrix white = centered * whitening;
  const double n = static_cast<double>(x.rows());

  Eigen::MatrixXd w(c, c);
  for (int i = 0; i < c; ++i)
    for (int j = 0; j < c; ++j) w(i, j) = rng.normal();
  w = symmetric_decorrelation(w);

  for (int iter = 0; iter < kIcaMaxIter; ++iter) {
    const Eigen::MatrixXd wx = white * w.transpose();  // n x c
    const Eigen::MatrixXd g = wx.array().tanh().matrix();
    const Eigen::VectorXd g_prime_mean = (1.0 - g.array().square()).colwise().mean().transpose();
    Eigen::MatrixXd w_new = (g.transpose() * white) / n - g_prime_mean.asDiagonal() * w;
    w_new = symmetric_decorrelation(w_new);
    const double lim = ((w_new * w.transpose()).diagonal().cwiseAbs().array() - 1.0).abs().maxCoeff();
    w = w_new;
    if (lim < kIcaTol) break;
  }
  return white * w.transpose();
}

Matrix fit_transform(const OperatorConfig& op, const Matrix& x, RngStream& rng) {
  if (is_clusterer(op.kind)) {
    throw Error(ErrorCode::InvalidInput, std::string(to_string(op.kind)) + " is not a transform");
  }
  if (!x.allFinite()) throw Error(ErrorCode::InvalidInput, "non-finite input");
  if (x.rows() < 2) throw Error(ErrorCode::InvalidInput, "need at least 2 rows");
  switch (op.kind) {
    case OperatorKind::MinMaxScaler: return min_max(x);
    case OperatorKind::StandardScaler: return standardize(x);
    case OperatorKind::Normalizer: return normalize_rows(x, op.get_name("norm"));
    case OperatorKind::VarianceThreshold: return variance_threshold(x, op.get_real("threshold"));
    case OperatorKind::PCA: return pca(x, static_cast<int>(op.get_int("n_components")));
    case OperatorKind::FastICA: return fast_ica(x, static_cast<int>(op.get_int("n_components")), rng);
    default: break;
  }
  throw Error(ErrorCode::InvalidInput, "unsupported transform");
}

}  // namespace poac::estimators
