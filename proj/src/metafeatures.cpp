#include "poac/metafeatures.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

#include "poac/kernels.hpp"

namespace poac::metafeatures {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kMadScale = 1.4826;
constexpr double kTrim = 0.2;
constexpr double kCorrelationCut = 0.5;
constexpr double kPcaVariance = 0.95;
constexpr int kCohesivenessNeighbors = 64;  // 2^-64 weights are below double resolution

struct ColumnStats {
  double mean = 0.0;
  double var = 0.0;
  double median = 0.0;
  double iqr = 0.0;
  double mad = 0.0;
  double trimmed_mean = 0.0;
  double distinct = 0.0;
  double min = 0.0;
  double max = 0.0;
};

ColumnStats column_stats(const Eigen::Ref<const Eigen::VectorXd>& col) {
  const auto n = static_cast<std::size_t>(col.size());
  std::vector<double> sorted(col.data(), col.data() + n);
  std::sort(sorted.begin(), sorted.end());
  ColumnStats s;
  s.min = sorted.front();
  s.max = sorted.back();
  s.mean = kernels::ordered_sum(sorted) / static_cast<double>(n);
  double ss = 0.0;
  for (const double v : sorted) ss += (v - s.mean) * (v - s.mean);
  s.var = ss / static_cast<double>(n - 1);
  s.median = quantile_sorted(sorted, 0.5);
  s.iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);

  std::vector<double> dev(n);
  for (std::size_t i = 0; i < n; ++i) dev[i] = std::abs(sorted[i] - s.median);
  std::sort(dev.begin(), dev.end());
  s.mad = quantile_sorted(dev, 0.5) * kMadScale;

  const auto cut = static_cast<std::size_t>(std::floor(kTrim * static_cast<double>(n)));
  double trimmed = 0.0;
  for (std::size_t i = cut; i < n - cut; ++i) trimmed += sorted[i];
  s.trimmed_mean = trimmed / static_cast<double>(n - 2 * cut);

  s.distinct = static_cast<double>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
  return s;
}

double entropy_bits(const std::vector<int>& codes, int bins) {
  std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
  for (const int c : codes) counts[static_cast<std::size_t>(c)] += 1.0;
  double h = 0.0;
  const double n = static_cast<double>(codes.size());
  for (const double c : counts) {
    if (c > 0.0) h -= (c / n) * std::log2(c / n);
  }
  return h;
}

Matrix minmax_normalize(const Matrix& x) {
  Matrix z = x;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double lo = x.col(j).minCoeff();
    const double range = x.col(j).maxCoeff() - lo;
    if (range > 0.0) {
      z.col(j) = (x.col(j).array() - lo) / range;
    } else {
      z.col(j).setZero();
    }
  }
  return z;
}

// wg_dist and cohesiveness per instance, on min-max normalized features.
void density_measures(const Matrix& x, std::vector<double>& wg, std::vector<double>& cohesiveness) {
  const Matrix z = minmax_normalize(x);
  const auto n = z.rows();
  const auto p = z.cols();
  auto dist = [&](Eigen::Index i, Eigen::Index j) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < p; ++k) {
      const double d = z(i, k) - z(j, k);
      s += d * d;
    }
    return std::sqrt(s);
  };

  std::vector<double> upper(static_cast<std::size_t>(n), 0.0);
#pragma omp parallel for schedule(dynamic, 16)
  for (Eigen::Index i = 0; i < n; ++i) {
    double s = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) s += dist(i, j);
    upper[static_cast<std::size_t>(i)] = s;
  }
  const double mean_dist =
      2.0 * kernels::ordered_sum(upper) / (static_cast<double>(n) * static_cast<double>(n - 1));

  wg.assign(static_cast<std::size_t>(n), 0.0);
  cohesiveness.assign(static_cast<std::size_t>(n), 0.0);
  const auto m = static_cast<std::size_t>(std::min<Eigen::Index>(n - 1, kCohesivenessNeighbors));
#pragma omp parallel
  {
    std::vector<double> row(static_cast<std::size_t>(n - 1));
#pragma omp for schedule(dynamic, 16)
    for (Eigen::Index i = 0; i < n; ++i) {
      std::size_t t = 0;
      double num = 0.0;
      double den = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        const double d = dist(i, j);
        row[t++] = d;
        if (mean_dist > 0.0) {
          const double w = std::exp2(-d / mean_dist);
          num += w * d;
          den += w;
        }
      }
      wg[static_cast<std::size_t>(i)] = den > 0.0 ? num / den : 0.0;
      std::partial_sort(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(m), row.end());
      double c = 0.0;
      for (std::size_t r = 0; r < m; ++r) c += std::exp2(-static_cast<double>(r + 1)) * row[r];
      cohesiveness[static_cast<std::size_t>(i)] = c;
    }
  }
}

}  // namespace

std::size_t index_of(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == name) return i;
  }
  throw Error(ErrorCode::InvalidInput, "unknown meta-feature '" + std::string(name) + "'");
}

std::pair<double, double> summarize(const std::vector<double>& values) {
  if (values.empty()) return {kNaN, kNaN};
  const double mean = kernels::ordered_sum(values) / static_cast<double>(values.size());
  if (values.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (const double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::vector<int> discretize(const Eigen::Ref<const Eigen::VectorXd>& column, int bins) {
  const double lo = column.minCoeff();
  const double range = column.maxCoeff() - lo;
  std::vector<int> codes(static_cast<std::size_t>(column.size()), 0);
  if (range <= 0.0) return codes;
  for (Eigen::Index i = 0; i < column.size(); ++i) {
    const int b = static_cast<int>(std::floor((column(i) - lo) / range * bins));
    codes[static_cast<std::size_t>(i)] = std::clamp(b, 0, bins - 1);
  }
  return codes;
}

double concentration(const std::vector<int>& x, const std::vector<int>& y, int bins) {
  const auto b = static_cast<std::size_t>(bins);
  std::vector<double> joint(b * b, 0.0);
  std::vector<double> px(b, 0.0);
  std::vector<double> py(b, 0.0);
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto a = static_cast<std::size_t>(x[i]);
    const auto c = static_cast<std::size_t>(y[i]);
    joint[a * b + c] += 1.0 / n;
    px[a] += 1.0 / n;
    py[c] += 1.0 / n;
  }
  double sum_py2 = 0.0;
  for (const double v : py) sum_py2 += v * v;
  const double denom = 1.0 - sum_py2;
  if (denom <= 1e-15) return 0.0;
  double num = 0.0;
  for (std::size_t a = 0; a < b; ++a) {
    if (px[a] <= 0.0) continue;
    for (std::size_t c = 0; c < b; ++c) num += joint[a * b + c] * joint[a * b + c] / px[a];
  }
  return (num - sum_py2) / denom;
}

std::vector<Eigen::Index> pair_attributes(Eigen::Index p) {
  std::vector<Eigen::Index> idx;
  if (p <= kMaxPairAttributes) {
    for (Eigen::Index j = 0; j < p; ++j) idx.push_back(j);
    return idx;
  }
  for (Eigen::Index t = 0; t < kMaxPairAttributes; ++t) idx.push_back(t * p / kMaxPairAttributes);
  return idx;
}

MetaFeatureVector extract(const Matrix& x) {
  const auto n = x.rows();
  const auto p = x.cols();
  if (n < 4) throw Error(ErrorCode::TooFewInstances, "meta-features need n >= 4, got " + std::to_string(n));
  if (p < 1) throw Error(ErrorCode::InvalidInput, "no attributes");
  const double nd = static_cast<double>(n);
  const double pd = static_cast<double>(p);

  std::vector<ColumnStats> stats(static_cast<std::size_t>(p));
#pragma omp parallel for schedule(static)
  for (Eigen::Index j = 0; j < p; ++j) stats[static_cast<std::size_t>(j)] = column_stats(x.col(j));

  std::vector<double> mean, var, sd, median, iqr, mad, tmean, sparsity, entropy;
  for (const auto& s : stats) {
    mean.push_back(s.mean);
    var.push_back(s.var);
    sd.push_back(std::sqrt(s.var));
    median.push_back(s.median);
    iqr.push_back(s.iqr);
    mad.push_back(s.mad);
    tmean.push_back(s.trimmed_mean);
    sparsity.push_back((nd / s.distinct - 1.0) / (nd - 1.0));
  }

  std::vector<std::vector<int>> codes(static_cast<std::size_t>(p));
  std::vector<std::vector<int>> items(static_cast<std::size_t>(p));
  for (Eigen::Index j = 0; j < p; ++j) {
    codes[static_cast<std::size_t>(j)] = discretize(x.col(j), kEntropyBins);
    items[static_cast<std::size_t>(j)] = discretize(x.col(j), kItemsetBins);
    entropy.push_back(entropy_bits(codes[static_cast<std::size_t>(j)], kEntropyBins));
  }

  // Pairwise measures over (a possibly subsampled set of) attributes.
  const auto attrs = pair_attributes(p);
  std::vector<double> conc;
  std::vector<double> abs_cov;
  std::size_t correlated = 0;
  for (std::size_t a = 0; a < attrs.size(); ++a) {
    for (std::size_t b = 0; b < attrs.size(); ++b) {
      if (a == b) continue;
      conc.push_back(concentration(codes[static_cast<std::size_t>(attrs[a])],
                                   codes[static_cast<std::size_t>(attrs[b])], kEntropyBins));
    }
  }
  for (std::size_t a = 0; a < attrs.size(); ++a) {
    for (std::size_t b = a + 1; b < attrs.size(); ++b) {
      const auto ja = attrs[a];
      const auto jb = attrs[b];
      const double ma = stats[static_cast<std::size_t>(ja)].mean;
      const double mb = stats[static_cast<std::size_t>(jb)].mean;
      double c = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) c += (x(i, ja) - ma) * (x(i, jb) - mb);
      c /= nd - 1.0;
      abs_cov.push_back(std::abs(c));
      const double sa = sd[static_cast<std::size_t>(ja)];
      const double sb = sd[static_cast<std::size_t>(jb)];
      const double r = (sa > 0.0 && sb > 0.0) ? c / (sa * sb) : 0.0;
      if (std::abs(r) >= kCorrelationCut) ++correlated;
    }
  }
  const double nr_cor_attr =
      abs_cov.empty() ? kNaN : static_cast<double>(correlated) / static_cast<double>(abs_cov.size());

  // Covariance spectrum and PCA dimension.
  const Matrix centered = x.rowwise() - x.colwise().mean();
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / (nd - 1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov, Eigen::EigenvaluesOnly);
  std::vector<double> eigenvalues(eig.eigenvalues().data(), eig.eigenvalues().data() + p);
  std::vector<double> desc = eigenvalues;
  std::sort(desc.begin(), desc.end(), std::greater<>());
  double total = 0.0;
  for (const double v : desc) total += std::max(v, 0.0);
  int pca_dims = 1;
  if (total > 0.0) {
    double cum = 0.0;
    pca_dims = 0;
    for (const double v : desc) {
      cum += std::max(v, 0.0);
      ++pca_dims;
      if (cum >= kPcaVariance * total) break;
    }
  }

  std::vector<double> one_itemset;
  for (const auto& col : items) {
    std::array<double, kItemsetBins> f{};
    for (const int c : col) f[static_cast<std::size_t>(c)] += 1.0;
    for (const double v : f) one_itemset.push_back(v / nd);
  }
  std::vector<double> two_itemset;
  for (Eigen::Index a = 0; a < p; ++a) {
    for (Eigen::Index b = a + 1; b < p; ++b) {
      std::array<double, kItemsetBins * kItemsetBins> f{};
      const auto& ca = items[static_cast<std::size_t>(a)];
      const auto& cb = items[static_cast<std::size_t>(b)];
      for (std::size_t i = 0; i < ca.size(); ++i) {
        f[static_cast<std::size_t>(ca[i] * kItemsetBins + cb[i])] += 1.0;
      }
      for (const double v : f) two_itemset.push_back(v / nd);
    }
  }

  std::vector<double> wg;
  std::vector<double> cohesiveness;
  density_measures(x, wg, cohesiveness);

  MetaFeatureVector out;
  auto put = [&](std::string_view name, double v) { out.values[index_of(name)] = v; };
  auto put2 = [&](std::string_view base, const std::vector<double>& v) {
    const auto [m, s] = summarize(v);
    put(std::string(base) + ".mean", m);
    put(std::string(base) + ".sd", s);
  };
  put2("attr_conc", conc);
  put2("attr_ent", entropy);
  put("attr_to_inst", pd / nd);
  put2("cohesiveness", cohesiveness);
  put2("cov", abs_cov);
  put2("eigenvalues", eigenvalues);
  put("inst_to_attr", nd / pd);
  put2("iq_range", iqr);
  put2("mad", mad);
  put2("median", median);
  put("nr_attr", pd);
  put("nr_cor_attr", nr_cor_attr);
  put("nr_inst", nd);
  put2("one_itemset", one_itemset);
  put2("sd", sd);
  put2("sparsity", sparsity);
  put("t2", pd / nd);
  put("t3", static_cast<double>(pca_dims) / nd);
  put("t4", static_cast<double>(pca_dims) / pd);
  put2("t_mean", tmean);
  put2("two_itemset", two_itemset);
  put2("var", var);
  put2("wg_dist", wg);
  return out;
}

}  // namespace poac::metafeatures
