#include <doctest.h>

#include <cmath>
#include <numeric>

#include "helpers.hpp"
#include "poac/metafeatures.hpp"

using namespace poac;
namespace mf = poac::metafeatures;

namespace {

Matrix random_matrix(Eigen::Index n, Eigen::Index p, std::uint64_t seed) {
  RngStream r(seed, 4);
  Matrix x(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j) x(i, j) = r.normal() * (1.0 + static_cast<double>(j)) + (i % 3 == 0 ? 2.0 : 0.0);
  return x;
}

double sample_var(const Eigen::VectorXd& v) {
  const double m = v.mean();
  return (v.array() - m).square().sum() / static_cast<double>(v.size() - 1);
}

}  // namespace

TEST_SUITE("metafeatures") {
  TEST_CASE("canonical name list") {
    CHECK(mf::kNames.size() == 38);
    CHECK(mf::kNames.front() == "attr_conc.mean");
    CHECK(mf::kNames.back() == "wg_dist.sd");
    CHECK(mf::index_of("sd.mean") == 23);
    CHECK(mf::index_of("t4") == 29);
    CHECK_THROWS_AS(mf::index_of("nope"), Error);
    for (std::size_t i = 1; i < mf::kNames.size(); ++i) CHECK(mf::kNames[i - 1] < mf::kNames[i]);
  }

  TEST_CASE("size ratios on a 150 x 4 dataset") {
    const auto v = mf::extract(random_matrix(150, 4, 1));
    CHECK(v["nr_inst"] == 150);
    CHECK(v["nr_attr"] == 4);
    CHECK(v["attr_to_inst"] == doctest::Approx(4.0 / 150));
    CHECK(v["inst_to_attr"] == doctest::Approx(37.5));
    CHECK(v["t2"] == doctest::Approx(4.0 / 150));
  }

  TEST_CASE("too few instances") {
    try {
      mf::extract(random_matrix(3, 2, 1));
      FAIL("expected TooFewInstances");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::TooFewInstances);
    }
  }

  TEST_CASE("constant column contributes zero spread") {
    Matrix x = random_matrix(60, 3, 2);
    x.col(1).setConstant(4.2);
    Matrix y = x;
    y.col(1) = random_matrix(60, 1, 3).col(0);
    const auto vx = mf::extract(x);
    // sd.mean over 3 columns with one zero equals the mean of the other two
    const double sd0 = std::sqrt(sample_var(x.col(0))), sd2 = std::sqrt(sample_var(x.col(2)));
    CHECK(vx["sd.mean"] == doctest::Approx((sd0 + 0.0 + sd2) / 3).epsilon(1e-12));
    CHECK(vx["var.mean"] == doctest::Approx((sample_var(x.col(0)) + sample_var(x.col(2))) / 3).epsilon(1e-12));
    Matrix only(60, 1);
    only.col(0).setConstant(1.0);
    Matrix two(60, 2);
    two.col(0).setConstant(1.0);
    two.col(1).setConstant(-3.0);
    const auto c = mf::extract(two);
    CHECK(c["sd.mean"] == 0.0);
    CHECK(c["var.mean"] == 0.0);
    CHECK(c["iq_range.mean"] == 0.0);
    CHECK(c["mad.mean"] == 0.0);
  }

  TEST_CASE("eigenvalue trace identity") {
    for (std::uint64_t s = 0; s < 5; ++s) {
      const auto x = random_matrix(80, 6, s);
      const auto v = mf::extract(x);
      double trace = 0;
      for (Eigen::Index j = 0; j < x.cols(); ++j) trace += sample_var(x.col(j));
      CHECK(std::abs(v["eigenvalues.mean"] * 6 - trace) <= 1e-9 * std::max(1.0, trace));
    }
  }

  TEST_CASE("every value is finite for p >= 2") {
    for (Eigen::Index p : {2, 5, 70}) {
      const auto v = mf::extract(random_matrix(50, p, static_cast<std::uint64_t>(p)));
      for (std::size_t i = 0; i < mf::kCount; ++i) CHECK_MESSAGE(std::isfinite(v.values[i]), mf::kNames[i]);
    }
  }

  TEST_CASE("building blocks") {
    CHECK(mf::summarize({}).first != mf::summarize({}).first);
    CHECK(mf::summarize({2.0}).second == 0.0);
    const auto [m, s] = mf::summarize({1.0, 2.0, 3.0, 4.0});
    CHECK(m == 2.5);
    CHECK(s == doctest::Approx(std::sqrt(5.0 / 3.0)));
    CHECK(mf::quantile_sorted({1, 2, 3, 4}, 0.25) == doctest::Approx(1.75));
    CHECK(mf::quantile_sorted({1, 2, 3, 4}, 0.5) == doctest::Approx(2.5));
    Eigen::VectorXd col(5);
    col << 0, 1, 2, 3, 10;
    const auto bins = mf::discretize(col, 10);
    CHECK(bins == std::vector<int>{0, 1, 2, 3, 9});
    const std::vector<int> a{0, 0, 1, 1}, b{1, 1, 0, 0}, c{0, 1, 0, 1};
    CHECK(mf::concentration(a, b, 2) == doctest::Approx(1.0));
    CHECK(mf::concentration(a, c, 2) == doctest::Approx(0.0));
    CHECK(mf::pair_attributes(10).size() == 10);
    CHECK(mf::pair_attributes(100).size() == 64);
  }

  TEST_CASE("sparsity and itemsets by hand") {
    Matrix x(4, 2);
    x << 0, 5, 0, 5, 1, 5, 1, 6;
    const auto v = mf::extract(x);
    // column 0 has 2 distinct values, column 1 has 2: (1/3)(4/2 - 1) each
    CHECK(v["sparsity.mean"] == doctest::Approx(1.0 / 3.0));
    CHECK(v["sparsity.sd"] == doctest::Approx(0.0));
    // items: col0 bins {0,0,1,1}, col1 bins {0,0,0,1}; frequencies .5,.5,.75,.25
    CHECK(v["one_itemset.mean"] == doctest::Approx(0.5));
    CHECK(v["one_itemset.sd"] == doctest::Approx(std::sqrt((0 + 0 + 0.0625 + 0.0625) / 3)));
  }

  TEST_CASE("t3 and t4 from the 95% principal components") {
    RngStream r(8, 8);
    Matrix x(200, 4);
    for (Eigen::Index i = 0; i < 200; ++i) {
      const double z = r.normal();
      x.row(i) << z, 2 * z + 1e-3 * r.normal(), -z, 0.5 * z;
    }
    const auto v = mf::extract(x);
    CHECK(v["t4"] == doctest::Approx(0.25));
    CHECK(v["t3"] == doctest::Approx(1.0 / 200));
    CHECK(v["nr_cor_attr"] == doctest::Approx(1.0));
  }

  TEST_CASE("shift and scale behavior") {
    const auto x = random_matrix(70, 4, 21);
    const auto base = mf::extract(x);
    Matrix shifted = x.array() + 3.5;
    const auto sv = mf::extract(shifted);
    for (const char* name : {"nr_inst", "nr_attr", "attr_to_inst", "inst_to_attr", "t2", "sparsity.mean", "sparsity.sd",
                             "attr_ent.mean", "attr_ent.sd", "one_itemset.mean", "one_itemset.sd",
                             "two_itemset.mean", "two_itemset.sd"}) {
      CHECK_MESSAGE(sv[name] == doctest::Approx(base[name]).epsilon(1e-9), name);
    }
    const double c = 2.5;
    Matrix scaled = x * c;
    const auto cv = mf::extract(scaled);
    CHECK(cv["var.mean"] == doctest::Approx(base["var.mean"] * c * c).epsilon(1e-9));
    CHECK(cv["sd.mean"] == doctest::Approx(base["sd.mean"] * c).epsilon(1e-9));
    CHECK(cv["cov.mean"] == doctest::Approx(base["cov.mean"] * c * c).epsilon(1e-9));
    CHECK(cv["cov.sd"] == doctest::Approx(base["cov.sd"] * c * c).epsilon(1e-9));
  }

  TEST_CASE("row permutation leaves every entry unchanged") {
    const auto x = random_matrix(90, 5, 33);
    std::vector<Eigen::Index> order(90);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    RngStream r(1, 2);
    r.shuffle(std::span<Eigen::Index>(order));
    Matrix y(90, 5);
    for (Eigen::Index i = 0; i < 90; ++i) y.row(i) = x.row(order[static_cast<std::size_t>(i)]);
    const auto a = mf::extract(x), b = mf::extract(y);
    for (std::size_t i = 0; i < mf::kCount; ++i) {
      CHECK_MESSAGE(std::abs(a.values[i] - b.values[i]) <= 1e-9 * std::max(1.0, std::abs(a.values[i])), mf::kNames[i]);
    }
    CHECK(mf::extract(x) == a);
  }
}
