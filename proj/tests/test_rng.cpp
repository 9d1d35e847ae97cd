#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "poac/rng.hpp"

using namespace poac;

TEST_SUITE("rng") {
  TEST_CASE("same seed and stream give the same draws") {
    RngStream a(42, 7), b(42, 7);
    for (int i = 0; i < 10000; ++i) REQUIRE(a.next_u64() == b.next_u64());
  }

  TEST_CASE("streams differ by seed and by id") {
    RngStream a(42, 7), b(42, 8), c(43, 7);
    int same_b = 0, same_c = 0;
    for (int i = 0; i < 1000; ++i) {
      const auto x = a.next_u64();
      same_b += x == b.next_u64();
      same_c += x == c.next_u64();
    }
    CHECK(same_b == 0);
    CHECK(same_c == 0);
  }

  TEST_CASE("derive does not depend on parent position") {
    RngStream a(1, 1);
    const auto before = a.derive(5);
    for (int i = 0; i < 100; ++i) a.next_u64();
    auto x = before;
    auto y = a.derive(5);
    for (int i = 0; i < 100; ++i) CHECK(x.next_u64() == y.next_u64());
  }

  TEST_CASE("uniform moments") {
    RngStream r(5, 0);
    const int n = 200000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
      const double u = r.uniform();
      REQUIRE(u >= 0.0);
      REQUIRE(u < 1.0);
      s += u;
      s2 += u * u;
    }
    CHECK(s / n == doctest::Approx(0.5).epsilon(0.01));
    CHECK(s2 / n - (s / n) * (s / n) == doctest::Approx(1.0 / 12).epsilon(0.02));
  }

  TEST_CASE("standard distributions have mean and variance close to theory") {
    RngStream r(6, 0);
    const int n = 200000;
    auto moments = [&](auto draw) {
      double s = 0, s2 = 0;
      for (int i = 0; i < n; ++i) {
        const double v = draw();
        s += v;
        s2 += v * v;
      }
      return std::pair{s / n, s2 / n - (s / n) * (s / n)};
    };
    const auto [nm, nv] = moments([&] { return r.normal(); });
    CHECK(std::abs(nm) < 0.01);
    CHECK(nv == doctest::Approx(1.0).epsilon(0.02));
    const auto [em, ev] = moments([&] { return r.exponential(); });
    CHECK(em == doctest::Approx(1.0).epsilon(0.02));
    CHECK(ev == doctest::Approx(1.0).epsilon(0.03));
    const auto [gm, gv] = moments([&] { return r.gumbel(); });
    CHECK(gm == doctest::Approx(0.5772156649).epsilon(0.02));
    CHECK(gv == doctest::Approx(M_PI * M_PI / 6).epsilon(0.03));
  }

  TEST_CASE("uniform_index is unbiased and in range") {
    RngStream r(7, 0);
    std::vector<int> counts(7, 0);
    for (int i = 0; i < 70000; ++i) {
      const auto v = r.uniform_index(7);
      REQUIRE(v < 7);
      ++counts[v];
    }
    for (int c : counts) CHECK(std::abs(c - 10000) < 400);
    CHECK(r.uniform_index(1) == 0);
    for (int i = 0; i < 1000; ++i) {
      const auto v = r.uniform_int(-3, 3);
      REQUIRE(v >= -3);
      REQUIRE(v <= 3);
    }
  }

  TEST_CASE("shuffle is a permutation") {
    RngStream r(8, 0);
    std::vector<int> v(100);
    std::iota(v.begin(), v.end(), 0);
    r.shuffle(std::span<int>(v));
    auto sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 100; ++i) CHECK(sorted[static_cast<std::size_t>(i)] == i);
  }

  TEST_CASE("fnv1a known values") {
    static_assert(fnv1a("") == 0xCBF29CE484222325ULL);
    CHECK(fnv1a("a") == 0xAF63DC4C8601EC8CULL);
  }
}
