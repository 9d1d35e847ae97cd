#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "helpers.hpp"
#include "poac/cvi.hpp"
#include "poac/datagen.hpp"
#include "poac/estimators.hpp"

using namespace poac;
using namespace poac::datagen;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::InvariantError;
}

// Square roots of the covariance eigenvalues of the rows with one label.
std::vector<double> axis_scales(const Dataset& d, int label) {
  std::vector<Eigen::Index> rows;
  for (std::size_t i = 0; i < d.labels->assignments.size(); ++i) {
    if (d.labels->assignments[i] == label) rows.push_back(static_cast<Eigen::Index>(i));
  }
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), d.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) x.row(static_cast<Eigen::Index>(i)) = d.features.row(rows[i]);
  const Eigen::MatrixXd c = x.rowwise() - x.colwise().mean();
  const Eigen::MatrixXd cov = c.transpose() * c / static_cast<double>(x.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  std::vector<double> out;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) out.push_back(std::sqrt(es.eigenvalues()(i)));
  return out;
}

}  // namespace

TEST_SUITE("datagen") {
  TEST_CASE("cluster sizes") {
    const auto a = cluster_sizes(150, 2, 1.0);
    CHECK(a == std::vector<int>{75, 75});
    const auto b = cluster_sizes(400, 2, 3.0);
    CHECK(*std::max_element(b.begin(), b.end()) == 300);
    CHECK(*std::min_element(b.begin(), b.end()) == 100);
    RngStream r(3, 3);
    for (int t = 0; t < 300; ++t) {
      const int n = static_cast<int>(r.uniform_int(150, 5000));
      const int k = static_cast<int>(r.uniform_int(2, 35));
      const double ir = r.uniform(1.0, 3.0);
      const auto s = cluster_sizes(n, k, ir);
      int total = 0;
      for (int v : s) {
        CHECK(v >= 1);
        total += v;
      }
      CHECK(total == n);
      const double lo = *std::min_element(s.begin(), s.end());
      const double hi = *std::max_element(s.begin(), s.end());
      CHECK(std::abs(hi / lo - ir) <= 2.0 / lo);
    }
    CHECK(code_of([] { cluster_sizes(10, 6, 1.0); }) == ErrorCode::SpecError);
  }

  TEST_CASE("spec validation") {
    DatasetSpec s;
    CHECK_NOTHROW(validate(s));
    s.clusters = 80;
    s.samples = 150;
    CHECK(code_of([&] { validate(s); }) == ErrorCode::SpecError);
    s = DatasetSpec{};
    s.dims = 101;
    CHECK(code_of([&] { validate(s); }) == ErrorCode::SpecError);
    s = DatasetSpec{};
    s.overlap = 1e-3;
    CHECK(code_of([&] { validate(s); }) == ErrorCode::SpecError);
    s = DatasetSpec{};
    s.imbalance_ratio = 0.5;
    CHECK(code_of([&] { validate(s); }) == ErrorCode::SpecError);
  }

  TEST_CASE("sample_spec stays inside the training ranges") {
    const auto ranges = DatasetSpecRanges::training();
    RngStream r(11, 0);
    std::map<Distribution, int> seen;
    for (int i = 0; i < 500; ++i) {
      const auto s = sample_spec(ranges, r);
      CHECK(s.dims >= 2);
      CHECK(s.dims <= 100);
      CHECK(s.clusters >= 2);
      CHECK(s.clusters <= 35);
      CHECK(s.clusters <= s.samples / 2);
      CHECK(s.samples >= 150);
      CHECK(s.samples <= 5000);
      CHECK(s.overlap >= 1e-6);
      CHECK(s.overlap <= 1e-5);
      CHECK(s.aspect_ref >= 1.5);
      CHECK(s.aspect_ref <= 5);
      CHECK(s.aspect_max_min >= 1);
      CHECK(s.aspect_max_min <= 5);
      CHECK(s.radius_max_min >= 1);
      CHECK(s.radius_max_min <= 5);
      CHECK(s.imbalance_ratio >= 1);
      CHECK(s.imbalance_ratio <= 3);
      CHECK_NOTHROW(validate(s));
      ++seen[s.distribution];
    }
    CHECK(seen.size() == 3);
  }

  TEST_CASE("degenerate and inverted ranges") {
    auto ranges = DatasetSpecRanges::training();
    ranges.dims = {2, 2};
    RngStream r(1, 1);
    for (int i = 0; i < 50; ++i) CHECK(sample_spec(ranges, r).dims == 2);
    ranges.dims = {5, 3};
    CHECK(code_of([&] { validate(ranges); }) == ErrorCode::ConfigError);
    CHECK(code_of([&] { sample_spec(ranges, r); }) == ErrorCode::ConfigError);
    ranges = DatasetSpecRanges::training();
    ranges.distributions.clear();
    CHECK(code_of([&] { validate(ranges); }) == ErrorCode::ConfigError);
  }

  TEST_CASE("validation ranges widen the shape knobs") {
    const auto v = DatasetSpecRanges::validation();
    CHECK(v.aspect_ref.lo == 1.0);
    CHECK(v.aspect_ref.hi == 10.0);
    CHECK(v.aspect_max_min.hi == 10.0);
    CHECK(v.radius_max_min.hi == 10.0);
    CHECK(v.dims.hi == 100);
  }

  TEST_CASE("ranges from a JSON file") {
    const auto dir = test::scratch("ranges_json");
    {
      std::ofstream f(dir / "r.json");
      f << R"({"base": "validation", "dims": [3, 4], "distributions": ["gumbel"]})";
    }
    const auto r = DatasetSpecRanges::from_name_or_file((dir / "r.json").string());
    CHECK(r.dims.lo == 3);
    CHECK(r.dims.hi == 4);
    CHECK(r.aspect_ref.hi == 10.0);
    REQUIRE(r.distributions.size() == 1);
    CHECK(r.distributions[0] == Distribution::Gumbel);
    {
      std::ofstream f(dir / "bad.json");
      f << R"({"dims": [3]})";
    }
    CHECK(code_of([&] { DatasetSpecRanges::from_name_or_file((dir / "bad.json").string()); }) ==
          ErrorCode::ConfigError);
    CHECK(code_of([&] { DatasetSpecRanges::from_name_or_file("no_such_ranges"); }) == ErrorCode::ConfigError);
  }

  TEST_CASE("generate respects shape, labels and determinism") {
    DatasetSpec s;
    s.dims = 3;
    s.clusters = 4;
    s.samples = 400;
    s.imbalance_ratio = 2.0;
    s.seed = 77;
    for (auto dist : {Distribution::Normal, Distribution::Exponential, Distribution::Gumbel}) {
      s.distribution = dist;
      const auto d = generate(s, "x");
      CHECK(d.rows() == 400);
      CHECK(d.cols() == 3);
      REQUIRE(d.labels);
      CHECK(d.labels->k == 4);
      const auto sizes = d.labels->cluster_sizes();
      const double lo = static_cast<double>(*std::min_element(sizes.begin(), sizes.end()));
      const double hi = static_cast<double>(*std::max_element(sizes.begin(), sizes.end()));
      CHECK(std::abs(hi / lo - 2.0) <= 2.0 / lo);
      const auto again = generate(s, "x");
      CHECK(again.features == d.features);
      CHECK(again.labels->assignments == d.labels->assignments);
    }
    auto two = s;
    two.dims = 2;
    two.clusters = 2;
    two.samples = 150;
    two.imbalance_ratio = 1.0;
    const auto sizes = generate(two).labels->cluster_sizes();
    CHECK(sizes == std::vector<std::size_t>{75, 75});
  }

  TEST_CASE("aspect and radius knobs shape the clusters") {
    DatasetSpec s;
    s.dims = 2;
    s.clusters = 2;
    s.samples = 4000;
    s.aspect_ref = 4.0;
    s.aspect_max_min = 1.0;
    s.radius_max_min = 1.0;
    s.seed = 5;
    const auto d = generate(s);
    for (int c = 0; c < 2; ++c) {
      const auto sc = axis_scales(d, c);
      CHECK(sc[1] / sc[0] == doctest::Approx(4.0).epsilon(0.1));
      CHECK(std::sqrt(sc[0] * sc[1]) == doctest::Approx(1.0).epsilon(0.1));
    }

    s.aspect_ref = 1.5;
    s.radius_max_min = 4.0;
    s.clusters = 6;
    s.samples = 3000;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      s.seed = seed;
      const auto e = generate(s);
      std::vector<double> radius;
      for (int c = 0; c < 6; ++c) {
        const auto sc = axis_scales(e, c);
        radius.push_back(std::sqrt(sc[0] * sc[1]));
      }
      const double ratio = *std::max_element(radius.begin(), radius.end()) /
                           *std::min_element(radius.begin(), radius.end());
      CHECK(ratio <= 4.0 * 1.15);
    }
  }

  TEST_CASE("centers are placed at the target gap") {
    CHECK(target_gap(1e-6) == doctest::Approx(std::sqrt(2.0) * 4.753424308822899));
    CHECK(target_gap(1e-5) < target_gap(1e-6));
  }

  TEST_CASE("well separated 3-cluster data is recovered by k-means") {
    int recovered = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      DatasetSpec s;
      s.dims = 2;
      s.clusters = 3;
      s.samples = 300;
      s.overlap = 1e-6;
      s.seed = seed;
      const auto d = generate(s);
      RngStream rng(seed, 1);
      const auto km = estimators::kmeans(d.features, 3, estimators::KMeansInit::PlusPlus, rng);
      const auto p = canonicalize(km.labels);
      if (cvi::adjusted_rand_index(*d.labels, p) >= 0.95) ++recovered;
    }
    CHECK(recovered >= 18);
  }

  TEST_CASE("corpus and manifest") {
    const auto dir = test::scratch("corpus");
    auto ranges = DatasetSpecRanges::training();
    ranges.samples = {150, 200};
    ranges.dims = {2, 6};
    ranges.clusters = {2, 5};
    const auto entries = generate_corpus(3, ranges, 9, dir);
    REQUIRE(entries.size() == 3);
    CHECK(entries[0].id == "ds_00000");
    for (const auto& e : entries) CHECK(std::filesystem::exists(dir / (e.id + ".csv")));
    const auto back = read_manifest(dir / "manifest.csv");
    REQUIRE(back.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(back[i].id == entries[i].id);
      CHECK(back[i].spec.seed == entries[i].spec.seed);
      CHECK(back[i].spec.overlap == entries[i].spec.overlap);
      CHECK(back[i].spec.distribution == entries[i].spec.distribution);
    }
    const auto header = test::slurp(dir / "manifest.csv");
    CHECK(header.substr(0, header.find('\n')) ==
          "id,dims,clusters,samples,overlap,aspect_ref,aspect_max_min,radius_max_min,distribution,"
          "imbalance_ratio,seed");
    const auto d0 = load_csv(dir / "ds_00000.csv");
    const auto g0 = generate(entries[0].spec, "ds_00000");
    CHECK(d0.features == g0.features);

    const auto dir2 = test::scratch("corpus2");
    generate_corpus(3, ranges, 9, dir2);
    for (const auto& e : entries) {
      CHECK(test::slurp(dir / (e.id + ".csv")) == test::slurp(dir2 / (e.id + ".csv")));
    }
    CHECK(list_corpus(dir).size() == 3);

    const auto one = test::scratch("corpus_one");
    CHECK(generate_corpus(1, ranges, 1, one).size() == 1);
    CHECK(code_of([&] { generate_corpus(0, ranges, 1, one); }) == ErrorCode::ConfigError);
  }
}
