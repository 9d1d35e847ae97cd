#pragma once

#include <array>
#include <string_view>
#include <vector>

#include "poac/core.hpp"

namespace poac::metafeatures {

inline constexpr std::size_t kCount = 38;

/// Canonical order; also the meta-base CSV header and the surrogate's leading
/// feature names.
inline constexpr std::array<std::string_view, kCount> kNames = {
    "attr_conc.mean", "attr_conc.sd",   "attr_ent.mean",   "attr_ent.sd",     "attr_to_inst",
    "cohesiveness.mean", "cohesiveness.sd", "cov.mean",    "cov.sd",          "eigenvalues.mean",
    "eigenvalues.sd", "inst_to_attr",   "iq_range.mean",   "iq_range.sd",     "mad.mean",
    "mad.sd",         "median.mean",    "median.sd",       "nr_attr",         "nr_cor_attr",
    "nr_inst",        "one_itemset.mean", "one_itemset.sd", "sd.mean",        "sd.sd",
    "sparsity.mean",  "sparsity.sd",    "t2",              "t3",              "t4",
    "t_mean.mean",    "t_mean.sd",      "two_itemset.mean", "two_itemset.sd", "var.mean",
    "var.sd",         "wg_dist.mean",   "wg_dist.sd",
};

/// Index of a canonical name; throws InvalidInput for unknown names.
std::size_t index_of(std::string_view name);

struct MetaFeatureVector {
  std::array<double, kCount> values{};

  double operator[](std::string_view name) const { return values[index_of(name)]; }
  bool operator==(const MetaFeatureVector&) const = default;
};

/// Bins used for entropy/concentration and for itemsets.
inline constexpr int kEntropyBins = 10;
inline constexpr int kItemsetBins = 2;
/// Attribute cap for pair enumeration (cov, attr_conc, nr_cor_attr).
inline constexpr int kMaxPairAttributes = 64;

/// Unsupervised meta-features of the feature matrix. Throws TooFewInstances
/// for n < 4. Pairwise entries are NaN when p == 1.
MetaFeatureVector extract(const Matrix& x);
inline MetaFeatureVector extract(const Dataset& d) { return extract(d.features); }

// Building blocks, exposed for tests.

/// Mean and sample sd (n-1); sd of a single value is 0; empty input gives NaN.
std::pair<double, double> summarize(const std::vector<double>& values);

/// Linear-interpolation quantile of sorted values, q in [0,1].
double quantile_sorted(const std::vector<double>& sorted, double q);

/// Equal-width bin index per value over the column's [min, max].
std::vector<int> discretize(const Eigen::Ref<const Eigen::VectorXd>& column, int bins);

/// Goodman-Kruskal concentration of y given x (both discrete codes in [0,bins)).
double concentration(const std::vector<int>& x, const std::vector<int>& y, int bins);

/// Columns used for pair enumeration: all when p <= cap, else a stride sample.
std::vector<Eigen::Index> pair_attributes(Eigen::Index p);

}  // namespace poac::metafeatures
