#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "poac/kernels.hpp"
#include "poac/parallel.hpp"

using namespace poac;

namespace {

Matrix random_matrix(Eigen::Index n, Eigen::Index p, std::uint64_t seed) {
  RngStream r(seed, 1);
  Matrix x(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) x(i, j) = r.normal();
  }
  return x;
}

Partition random_partition(std::size_t n, int k, std::uint64_t seed) {
  RngStream r(seed, 2);
  std::vector<int> a(n);
  for (std::size_t i = 0; i < n; ++i) a[i] = i < static_cast<std::size_t>(k) ? static_cast<int>(i)
                                                                          : static_cast<int>(r.uniform_index(k));
  return canonicalize(a);
}

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("parallel kernels match the serial reference bit for bit") {
    for (int threads : {1, 3, 8}) {
      set_num_threads(threads);
      for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        const auto x = random_matrix(97, 5, seed);
        const auto d = kernels::pairwise_distances(x);
        CHECK(d == kernels::reference::pairwise_distances(x));

        const auto p = random_partition(97, 4, seed);
        const auto s = kernels::silhouette_samples(d, p);
        CHECK(s == kernels::reference::silhouette_samples(d, p));
        CHECK(kernels::silhouette_samples_direct(x, p) == s);

        const auto c = random_matrix(6, 5, seed + 100);
        std::vector<int> l1(97), l2(97);
        std::vector<double> s1(97), s2(97);
        kernels::assign_nearest(x, c, l1, s1);
        kernels::reference::assign_nearest(x, c, l2, s2);
        CHECK(l1 == l2);
        CHECK(s1 == s2);

        const auto n1 = kernels::radius_neighbors(x, 1.2);
        const auto n2 = kernels::reference::radius_neighbors(x, 1.2);
        CHECK(n1 == n2);
      }
    }
    set_num_threads(0);
  }

  TEST_CASE("distance matrix is symmetric with zero diagonal") {
    const auto x = random_matrix(40, 3, 11);
    const auto d = kernels::pairwise_distances(x);
    for (Eigen::Index i = 0; i < 40; ++i) {
      CHECK(d(i, i) == 0.0);
      for (Eigen::Index j = 0; j < 40; ++j) CHECK(d(i, j) == d(j, i));
    }
    CHECK(d(3, 7) == doctest::Approx((x.row(3) - x.row(7)).norm()));
  }

  TEST_CASE("assign_nearest breaks ties toward the lower index") {
    Matrix x(1, 1);
    x << 0.0;
    Matrix c(2, 1);
    c << -1.0, 1.0;
    std::vector<int> l(1);
    std::vector<double> s(1);
    kernels::assign_nearest(x, c, l, s);
    CHECK(l[0] == 0);
    CHECK(s[0] == 1.0);
  }

  TEST_CASE("singleton clusters get a zero silhouette") {
    Matrix x(3, 1);
    x << 0, 1, 10;
    const auto p = canonicalize(std::vector<int>{0, 0, 1});
    const auto s = kernels::silhouette_samples(kernels::pairwise_distances(x), p);
    CHECK(s[2] == 0.0);
    CHECK(s[0] == doctest::Approx(0.9));
  }

  TEST_CASE("ordered_sum") {
    const std::vector<double> v{1e16, 1.0, -1e16};
    CHECK(kernels::ordered_sum(v) == ((1e16 + 1.0) + -1e16));
    CHECK(kernels::ordered_sum(std::vector<double>{}) == 0.0);
  }
}
