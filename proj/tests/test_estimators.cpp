#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <chrono>
#include <cmath>
#include <limits>

#include "helpers.hpp"
#include "poac/cvi.hpp"
#include "poac/datagen.hpp"
#include "poac/estimators.hpp"
#include "poac/kernels.hpp"

using namespace poac;
using namespace poac::estimators;

namespace {

OperatorConfig op(OperatorKind kind, std::map<std::string, HyperValue> hp = {}) { return {kind, std::move(hp)}; }

OperatorConfig kmeans_op(std::int64_t k) {
  return op(OperatorKind::KMeans, {{"n_clusters", k}, {"init", std::string("k-means++")}});
}

Matrix random_matrix(Eigen::Index n, Eigen::Index p, std::uint64_t seed) {
  RngStream r(seed, 8);
  Matrix x(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j) x(i, j) = r.normal() * static_cast<double>(j + 1);
  return x;
}

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::InvariantError;
}

// Textbook Ward agglomeration: recompute every cluster-pair cost from centroids.
std::vector<double> naive_ward_heights(const Matrix& x) {
  std::vector<std::vector<Eigen::Index>> clusters;
  for (Eigen::Index i = 0; i < x.rows(); ++i) clusters.push_back({i});
  auto centroid = [&](const std::vector<Eigen::Index>& c) {
    Eigen::RowVectorXd m = Eigen::RowVectorXd::Zero(x.cols());
    for (auto i : c) m += x.row(i);
    return Eigen::RowVectorXd(m / static_cast<double>(c.size()));
  };
  std::vector<double> heights;
  while (clusters.size() > 1) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t ba = 0, bb = 0;
    for (std::size_t a = 0; a < clusters.size(); ++a) {
      for (std::size_t b = a + 1; b < clusters.size(); ++b) {
        const double na = static_cast<double>(clusters[a].size()), nb = static_cast<double>(clusters[b].size());
        const double cost = 2.0 * na * nb / (na + nb) * (centroid(clusters[a]) - centroid(clusters[b])).squaredNorm();
        if (cost < best) {
          best = cost;
          ba = a;
          bb = b;
        }
      }
    }
    heights.push_back(std::sqrt(best));
    clusters[ba].insert(clusters[ba].end(), clusters[bb].begin(), clusters[bb].end());
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bb));
  }
  std::sort(heights.begin(), heights.end());
  return heights;
}

}  // namespace

TEST_SUITE("estimators") {
  TEST_CASE("pipeline invariants") {
    CHECK_NOTHROW(PipelineSpec({kmeans_op(2)}));
    CHECK_NOTHROW(PipelineSpec({op(OperatorKind::MinMaxScaler), op(OperatorKind::StandardScaler),
                                op(OperatorKind::MinMaxScaler), kmeans_op(2)}));
    CHECK(code_of([] { PipelineSpec({kmeans_op(2), op(OperatorKind::MinMaxScaler)}); }) == ErrorCode::InvalidInput);
    CHECK(code_of([] { PipelineSpec({kmeans_op(2), kmeans_op(3)}); }) == ErrorCode::InvalidInput);
    CHECK(code_of([] { PipelineSpec({}); }) == ErrorCode::InvalidInput);
    CHECK(code_of([] {
            PipelineSpec({op(OperatorKind::MinMaxScaler), op(OperatorKind::MinMaxScaler), op(OperatorKind::MinMaxScaler),
                          op(OperatorKind::MinMaxScaler), kmeans_op(2)});
          }) == ErrorCode::InvalidInput);
  }

  TEST_CASE("search space grids") {
    const auto s = OperatorSpace::full();
    CHECK(s.preprocessors.size() == 6);
    CHECK(s.clusterers.size() == 5);
    const auto& km = s.def(OperatorKind::KMeans);
    CHECK(km.grids[0].values.size() == 21);
    const auto& db = s.def(OperatorKind::DBSCAN);
    CHECK(db.grids[0].values.size() == 6);
    CHECK(OperatorSpace::kmeans_only(2, 10).clusterer_configurations() == 9);
    CHECK_NOTHROW(validate(kmeans_op(22), s));
    CHECK(code_of([&] { validate(kmeans_op(23), s); }) == ErrorCode::InvalidInput);
    CHECK(code_of([&] { validate(op(OperatorKind::KMeans, {{"n_clusters", std::int64_t{3}}}), s); }) ==
          ErrorCode::InvalidInput);
  }

  TEST_CASE("pipeline JSON round trip") {
    const PipelineSpec p({op(OperatorKind::VarianceThreshold, {{"threshold", 0.25}}),
                          op(OperatorKind::Normalizer, {{"norm", std::string("l2")}}),
                          op(OperatorKind::DBSCAN, {{"eps", 1.0}, {"min_samples", std::int64_t{5}}})});
    const auto j = to_json(p);
    CHECK(pipeline_from_json(nlohmann::json::parse(j.dump())) == p);
    CHECK(pipeline_key(p) == j.dump());
    CHECK(j.dump().find("\"kind\":\"VarianceThreshold\"") != std::string::npos);
    CHECK(code_of([] { pipeline_from_json(nlohmann::json::parse(R"({"steps":[{"kind":"Nope"}]})")); }) ==
          ErrorCode::FormatError);
    CHECK(code_of([] { pipeline_from_json(nlohmann::json::parse(R"({"x":1})")); }) == ErrorCode::FormatError);
  }

  TEST_CASE("scalers") {
    RngStream rng(1, 1);
    Matrix x(3, 2);
    x << 2, 7, 4, 7, 6, 7;
    const auto mm = fit_transform(op(OperatorKind::MinMaxScaler), x, rng);
    CHECK(mm(0, 0) == 0.0);
    CHECK(mm(1, 0) == 0.5);
    CHECK(mm(2, 0) == 1.0);
    CHECK(mm.col(1).isZero());

    const auto y = random_matrix(50, 4, 3);
    const auto st = fit_transform(op(OperatorKind::StandardScaler), y, rng);
    for (Eigen::Index j = 0; j < 4; ++j) {
      const double m = st.col(j).mean();
      const double sd = std::sqrt((st.col(j).array() - m).square().mean());
      CHECK(std::abs(m) <= 1e-9);
      CHECK(std::abs(sd - 1.0) <= 1e-9);
    }

    Matrix z(2, 2);
    z << 3, -4, 0, 0;
    const auto l2 = fit_transform(op(OperatorKind::Normalizer, {{"norm", std::string("l2")}}), z, rng);
    CHECK(l2(0, 0) == doctest::Approx(0.6));
    CHECK(l2(0, 1) == doctest::Approx(-0.8));
    CHECK(l2.row(1).isZero());
    const auto l1 = fit_transform(op(OperatorKind::Normalizer, {{"norm", std::string("l1")}}), z, rng);
    CHECK(l1(0, 0) == doctest::Approx(3.0 / 7));
  }

  TEST_CASE("variance threshold") {
    RngStream rng(1, 1);
    Matrix x(4, 3);
    x << 0, 1, 0, 0, 1, 1, 0, 1, 0, 0, 1, 1;
    const auto out = fit_transform(op(OperatorKind::VarianceThreshold, {{"threshold", 0.1}}), x, rng);
    CHECK(out.cols() == 1);
    CHECK(out.col(0) == x.col(2));
    Matrix flat(4, 2);
    flat << 0, 0, 0.1, 0.2, 0, 0, 0.1, 0.2;
    const auto kept = fit_transform(op(OperatorKind::VarianceThreshold, {{"threshold", 0.25}}), flat, rng);
    CHECK(kept.cols() == 1);
    CHECK(kept.col(0) == flat.col(1));
  }

  TEST_CASE("full-rank PCA preserves distances") {
    RngStream rng(1, 1);
    const auto x = random_matrix(40, 3, 5);
    const auto y = fit_transform(op(OperatorKind::PCA, {{"n_components", std::int64_t{3}}}), x, rng);
    CHECK((kernels::pairwise_distances(x) - kernels::pairwise_distances(y)).cwiseAbs().maxCoeff() <= 1e-8);
    const auto clipped = fit_transform(op(OperatorKind::PCA, {{"n_components", std::int64_t{10}}}), x, rng);
    CHECK(clipped.cols() == 3);
    const auto two = pca(x, 2);
    CHECK(two.cols() == 2);
    // component variances are non-increasing
    CHECK(two.col(0).squaredNorm() >= two.col(1).squaredNorm());
  }

  TEST_CASE("FastICA separates two independent sources") {
    RngStream rng(4, 4);
    const int n = 2000;
    Matrix s(n, 2);
    for (int i = 0; i < n; ++i) {
      s(i, 0) = std::sin(i * 0.05);
      s(i, 1) = rng.uniform(-1, 1);
    }
    Eigen::Matrix2d mix;
    mix << 1.0, 0.5, 0.4, 1.0;
    const Matrix x = s * mix.transpose();
    const auto y = fast_ica(x, 2, rng);
    CHECK(y.cols() == 2);
    // each recovered component correlates strongly with one source
    for (Eigen::Index c = 0; c < 2; ++c) {
      double best = 0;
      for (Eigen::Index k = 0; k < 2; ++k) {
        const Eigen::VectorXd a = y.col(c).array() - y.col(c).mean();
        const Eigen::VectorXd b = s.col(k).array() - s.col(k).mean();
        best = std::max(best, std::abs(a.dot(b) / (a.norm() * b.norm())));
      }
      CHECK(best > 0.95);
    }
    CHECK(y.allFinite());
  }

  TEST_CASE("non-finite input is rejected") {
    RngStream rng(1, 1);
    Matrix x = random_matrix(10, 2, 1);
    x(3, 1) = std::nan("");
    CHECK(code_of([&] { fit_transform(op(OperatorKind::StandardScaler), x, rng); }) == ErrorCode::InvalidInput);
    CHECK(code_of([&] { cluster(kmeans_op(2), x, rng); }) == ErrorCode::InvalidInput);
  }

  TEST_CASE("k-means on the four-point fixture") {
    const auto d = test::four_points();
    RngStream rng(3, 3);
    const auto p = cluster(kmeans_op(2), d.features, rng);
    CHECK(cvi::adjusted_rand_index(p, *d.labels) == 1.0);
    const auto all = kmeans(d.features, 4, KMeansInit::Random, rng);
    CHECK(all.inertia == 0.0);
    CHECK(canonicalize(all.labels).k == 4);
    CHECK(code_of([&] { kmeans(d.features, 5, KMeansInit::PlusPlus, rng); }) == ErrorCode::InfeasibleK);
  }

  TEST_CASE("k-means inertia never increases across iterations") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      RngStream rng(seed, 0);
      const auto x = random_matrix(200, 3, seed);
      for (auto init : {KMeansInit::PlusPlus, KMeansInit::Random}) {
        const auto r = kmeans(x, 5, init, rng);
        REQUIRE_FALSE(r.inertia_history.empty());
        for (std::size_t i = 1; i < r.inertia_history.size(); ++i) {
          CHECK(r.inertia_history[i] <= r.inertia_history[i - 1] * (1 + 1e-12));
        }
        CHECK(r.inertia == doctest::Approx(r.inertia_history.back()));
      }
    }
  }

  TEST_CASE("mini-batch k-means finds separated blobs") {
    const auto d = test::blobs(60, 3, 2, 0.5, 3);
    RngStream rng(1, 2);
    const auto r = minibatch_kmeans(d.features, 3, 32, rng);
    CHECK(cvi::adjusted_rand_index(canonicalize(r.labels), *d.labels) == 1.0);
  }

  TEST_CASE("DBSCAN neighborhoods and noise policy") {
    const auto d = test::blobs(40, 3, 2, 0.5, 9);
    const double eps = 1.0;
    const int min_samples = 5;
    const auto r = dbscan(d.features, eps, min_samples);
    const auto dist = kernels::pairwise_distances(d.features);
    const auto n = d.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
      int count = 0;
      for (Eigen::Index j = 0; j < n; ++j) count += dist(i, j) <= eps;
      CHECK(static_cast<bool>(r.core[static_cast<std::size_t>(i)]) == (count >= min_samples));
    }
    std::map<int, bool> has_core;
    for (std::size_t i = 0; i < r.raw_labels.size(); ++i) {
      if (r.raw_labels[i] >= 0) has_core[r.raw_labels[i]] = has_core[r.raw_labels[i]] || r.core[i];
      if (r.core[i]) CHECK(r.raw_labels[i] >= 0);
    }
    for (const auto& [label, core] : has_core) CHECK(core);
    const auto p = resolve_noise(d.features, r.raw_labels);
    CHECK(p.size() == static_cast<std::size_t>(n));
    CHECK(cvi::adjusted_rand_index(p, *d.labels) == 1.0);

    RngStream rng(1, 1);
    const auto tiny = cluster(op(OperatorKind::DBSCAN, {{"eps", 0.001}, {"min_samples", std::int64_t{2}}}),
                              d.features, rng);
    CHECK(tiny.k == n);
  }

  TEST_CASE("noise is reassigned to the nearest centroid") {
    Matrix x(5, 1);
    x << 0, 0.1, 10, 10.1, 8;
    const auto p = resolve_noise(x, {0, 0, 1, 1, -1});
    CHECK(p.assignments == std::vector<int>{0, 0, 1, 1, 1});
  }

  TEST_CASE("Ward agreement with a naive agglomeration") {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      const auto x = random_matrix(30, 2, 40 + seed);
      const auto w = ward(x, 3);
      const auto naive = naive_ward_heights(x);
      REQUIRE(w.merge_heights.size() == naive.size());
      for (std::size_t i = 0; i < naive.size(); ++i) {
        CHECK(w.merge_heights[i] == doctest::Approx(naive[i]).epsilon(1e-9));
        if (i > 0) CHECK(w.merge_heights[i] >= w.merge_heights[i - 1]);
      }
      CHECK(canonicalize(w.labels).k == 3);
    }
    const auto d = test::blobs(30, 4, 3, 0.5, 2);
    CHECK(cvi::adjusted_rand_index(canonicalize(ward(d.features, 4).labels), *d.labels) == 1.0);
  }

  TEST_CASE("spectral clustering") {
    const auto d = test::blobs(30, 3, 2, 0.5, 4);
    for (auto aff : {Affinity::Rbf, Affinity::NearestNeighbors}) {
      RngStream rng(2, 2);
      const auto r = spectral(d.features, 3, aff, rng);
      CHECK((r.affinity - r.affinity.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
      CHECK(r.laplacian_eigenvalues.minCoeff() >= -1e-8);
      CHECK(r.laplacian_eigenvalues.maxCoeff() <= 2 + 1e-8);
      if (aff == Affinity::NearestNeighbors) {
        CHECK(cvi::adjusted_rand_index(canonicalize(r.labels), *d.labels) == 1.0);
      }
    }
  }

  TEST_CASE("spectral embedding does not depend on n_clusters or call history") {
    const auto d = test::blobs(40, 3, 3, 0.8, 9);
    RngStream a(5, 1);
    const auto first = spectral(d.features, 3, Affinity::Rbf, a);
    RngStream b(5, 2);
    const auto other = spectral(d.features, 6, Affinity::Rbf, b);
    RngStream c(5, 1);
    const auto again = spectral(d.features, 3, Affinity::Rbf, c);
    CHECK(first.laplacian_eigenvalues.size() == kSpectralEigenpairs);
    CHECK(first.laplacian_eigenvalues == other.laplacian_eigenvalues);
    CHECK(first.labels == again.labels);
    const Matrix shifted = (d.features.array() + 1e-3).matrix();
    RngStream e(5, 1);
    const auto moved = spectral(shifted, 3, Affinity::Rbf, e);
    CHECK((moved.laplacian_eigenvalues - first.laplacian_eigenvalues).cwiseAbs().maxCoeff() <= 1e-9);
  }

  TEST_CASE("smallest eigenpairs agree with a full eigensolver") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
      const Eigen::Index n = 5 + static_cast<Eigen::Index>(seed) * 17;
      const Matrix r = random_matrix(n, n, seed);
      Eigen::MatrixXd a = r * r.transpose() / static_cast<double>(n);
      if (seed % 2 == 1) {
        // repeated eigenvalues: a block-diagonal matrix with identical blocks
        const auto h = n / 2;
        a.setZero();
        const Eigen::MatrixXd block = (r.topLeftCorner(h, h) * r.topLeftCorner(h, h).transpose()).eval();
        a.topLeftCorner(h, h) = block;
        a.block(h, h, h, h) = block;
      }
      const int count = static_cast<int>(std::min<Eigen::Index>(n, 6));
      const auto mine = smallest_eigenpairs(a, count);
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> full(a);
      const double scale = std::max(1.0, full.eigenvalues().cwiseAbs().maxCoeff());
      for (int j = 0; j < count; ++j) {
        CHECK(std::abs(mine.values(j) - full.eigenvalues()(j)) <= 1e-11 * scale);
        CHECK((a * mine.vectors.col(j) - mine.values(j) * mine.vectors.col(j)).norm() <= 1e-8 * scale);
      }
      CHECK((mine.vectors.transpose() * mine.vectors - Eigen::MatrixXd::Identity(count, count)).cwiseAbs().maxCoeff() <=
            1e-10);
    }
    CHECK_THROWS_AS(smallest_eigenpairs(Eigen::MatrixXd::Identity(3, 3), 4), Error);
  }

  TEST_CASE("apply_pipeline keeps row alignment and is deterministic") {
    const auto d = test::four_points();
    RngStream rng(1, 1);
    const PipelineSpec scaled({op(OperatorKind::MinMaxScaler), kmeans_op(2)});
    CHECK(cvi::adjusted_rand_index(apply_pipeline(scaled, d, rng), *d.labels) == 1.0);

    const auto x = random_matrix(60, 5, 2);
    const PipelineSpec dropping({op(OperatorKind::VarianceThreshold, {{"threshold", 0.25}}),
                                 op(OperatorKind::PCA, {{"n_components", std::int64_t{2}}}),
                                 op(OperatorKind::Spectral, {{"n_clusters", std::int64_t{3}},
                                                             {"affinity", std::string("rbf")}})});
    RngStream a(5, 5), b(5, 5);
    const auto pa = apply_pipeline(dropping, x, a);
    CHECK(pa.size() == 60);
    CHECK(apply_pipeline(dropping, x, b) == pa);
  }

  TEST_CASE("k-means recovers generated 3-cluster data through a pipeline") {
    datagen::DatasetSpec s;
    s.clusters = 3;
    s.samples = 300;
    s.dims = 4;
    s.seed = 12;
    const auto d = datagen::generate(s);
    RngStream rng(1, 1);
    CHECK(cvi::adjusted_rand_index(apply_pipeline(PipelineSpec({kmeans_op(3)}), d, rng), *d.labels) >= 0.95);
  }

  TEST_CASE("step errors carry the step index") {
    const auto d = test::four_points();
    RngStream rng(1, 1);
    try {
      apply_pipeline(PipelineSpec({op(OperatorKind::MinMaxScaler), kmeans_op(9)}), d, rng);
      FAIL("expected InfeasibleK");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InfeasibleK);
      CHECK(std::string(e.what()).find("step 1") != std::string::npos);
    }
  }

  TEST_CASE("deadline") {
    const Deadline none;
    CHECK_NOTHROW(none.check());
    const Deadline past{std::chrono::duration<double>(-1.0)};
    CHECK(code_of([&] { past.check(); }) == ErrorCode::Timeout);
    const auto x = random_matrix(400, 3, 1);
    RngStream rng(1, 1);
    CHECK(code_of([&] { kmeans(x, 5, KMeansInit::PlusPlus, rng, 10, past); }) == ErrorCode::Timeout);
  }
}
