#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "helpers.hpp"
#include "poac/cvi.hpp"
#include "poac/datagen.hpp"
#include "poac/metabase.hpp"
#include "poac/optimizer.hpp"

using namespace poac;
using namespace poac::optimizer;
using estimators::OperatorKind;
using estimators::OperatorSpace;
using estimators::PipelineSpec;

namespace {

PipelineSpec kmeans_pipeline(std::int64_t k) {
  return PipelineSpec({{OperatorKind::KMeans, {{"n_clusters", k}, {"init", std::string("k-means++")}}}});
}

bool valid_in(const PipelineSpec& p, const OperatorSpace& space, int max_length) {
  if (p.complexity() < 1 || p.complexity() > static_cast<std::size_t>(max_length)) return false;
  for (std::size_t i = 0; i < p.steps().size(); ++i) {
    const auto& s = p.steps()[i];
    if (estimators::is_clusterer(s.kind) != (i + 1 == p.steps().size())) return false;
    try {
      estimators::validate(s, space);
    } catch (const Error&) {
      return false;
    }
  }
  return true;
}

Dataset generated(std::uint64_t seed, int clusters, int samples, int dims) {
  datagen::DatasetSpec s;
  s.clusters = clusters;
  s.samples = samples;
  s.dims = dims;
  s.seed = seed;
  return datagen::generate(s, "opt" + std::to_string(seed));
}

}  // namespace

TEST_SUITE("optimizer") {
  TEST_CASE("mode names") {
    CHECK(to_string(Mode::Full) == "full");
    CHECK(mode_from_string("sil") == Mode::SilOnly);
    CHECK(mode_from_string("dbs-only") == Mode::DbsOnly);
    CHECK(mode_from_string("cvi") == Mode::CviOnly);
    CHECK_THROWS_AS(mode_from_string("ari"), Error);
  }

  TEST_CASE("configuration validation") {
    CHECK_NOTHROW(validate(EvolutionConfig{}));
    EvolutionConfig c;
    c.population_size = 1;
    CHECK_THROWS_AS(validate(c), Error);
    c = {};
    c.crossover_rate = 1.5;
    CHECK_THROWS_AS(validate(c), Error);
    c = {};
    c.max_pipeline_length = 0;
    CHECK_THROWS_AS(validate(c), Error);
    try {
      validate(FitnessMode{Mode::Full, nullptr});
      FAIL("expected ConfigError");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ConfigError);
    }
    CHECK_NOTHROW(validate(FitnessMode{Mode::SilOnly, nullptr}));
  }

  TEST_CASE("sil-only fitness on the four-point fixture") {
    const auto d = test::four_points();
    const auto mu = metafeatures::extract(d);
    RngStream rng(1, 1);
    const auto e = evaluate(kmeans_pipeline(2), d, mu, {Mode::SilOnly, nullptr}, rng);
    CHECK(e.error.empty());
    CHECK(e.k == 2);
    CHECK(e.fitness == doctest::Approx(0.900248).epsilon(1e-6));
    CHECK(e.fitness == e.sil);
    const auto dbs = evaluate(kmeans_pipeline(2), d, mu, {Mode::DbsOnly, nullptr}, rng);
    CHECK(dbs.fitness == doctest::Approx(-0.1).epsilon(1e-9));
  }

  TEST_CASE("degenerate partitions get the worst fitness") {
    const auto d = test::four_points();
    const auto mu = metafeatures::extract(d);
    RngStream rng(1, 1);
    const auto all = evaluate(kmeans_pipeline(4), d, mu, {Mode::SilOnly, nullptr}, rng);
    CHECK(all.fitness == kWorstFitness);
    CHECK_FALSE(all.error.empty());
    const auto infeasible = evaluate(kmeans_pipeline(9), d, mu, {Mode::SilOnly, nullptr}, rng);
    CHECK(infeasible.fitness == kWorstFitness);
    CHECK(infeasible.error.find("InfeasibleK") != std::string::npos);
    const PipelineSpec lone({{OperatorKind::DBSCAN, {{"eps", 100.0}, {"min_samples", std::int64_t{2}}}}});
    CHECK(evaluate(lone, d, mu, {Mode::SilOnly, nullptr}, rng).fitness == kWorstFitness);
    CHECK(better(0.1, kmeans_pipeline(2), kWorstFitness, kmeans_pipeline(3)));
    CHECK_FALSE(better(kWorstFitness, kmeans_pipeline(2), -1e300, kmeans_pipeline(3)));
  }

  TEST_CASE("ranking ties fall back to complexity then key") {
    const PipelineSpec longer({{OperatorKind::MinMaxScaler, {}},
                               {OperatorKind::KMeans, {{"n_clusters", std::int64_t{2}}, {"init", std::string("k-means++")}}}});
    CHECK(better(0.5, kmeans_pipeline(2), 0.5, longer));
    CHECK_FALSE(better(0.5, longer, 0.5, kmeans_pipeline(2)));
    CHECK(better(0.5, kmeans_pipeline(2), 0.5, kmeans_pipeline(3)) !=
          better(0.5, kmeans_pipeline(3), 0.5, kmeans_pipeline(2)));
    CHECK_FALSE(better(0.5, kmeans_pipeline(2), 0.5, kmeans_pipeline(2)));
  }

  TEST_CASE("evaluator memoizes and is order independent") {
    const auto d = test::blobs(20, 3, 2, 0.5, 3);
    Evaluator ev(d.features, {Mode::SilOnly, nullptr}, 5);
    const auto a = ev.evaluate(kmeans_pipeline(3));
    CHECK(ev.cache_size() == 1);
    const auto b = ev.evaluate(kmeans_pipeline(3));
    CHECK(ev.cache_hits() == 1);
    CHECK(a.fitness == b.fitness);
    std::vector<PipelineSpec> batch{kmeans_pipeline(4), kmeans_pipeline(2), kmeans_pipeline(3), kmeans_pipeline(4)};
    const auto r = ev.evaluate_all(batch);
    REQUIRE(r.size() == 4);
    CHECK(r[2].fitness == a.fitness);
    CHECK(r[0].fitness == r[3].fitness);
    CHECK(ev.cache_size() == 3);

    Evaluator fresh(d.features, {Mode::SilOnly, nullptr}, 5);
    std::vector<PipelineSpec> reversed(batch.rbegin(), batch.rend());
    const auto rr = fresh.evaluate_all(reversed);
    for (std::size_t i = 0; i < 4; ++i) CHECK(rr[i].fitness == r[3 - i].fitness);
    CHECK(cvi::adjusted_rand_index(ev.partition(kmeans_pipeline(3)), *d.labels) == 1.0);
  }

  TEST_CASE("variation operators stay inside the space") {
    const auto space = OperatorSpace::full();
    RngStream rng(77, 1);
    std::set<std::size_t> lengths;
    for (int i = 0; i < 10000; ++i) {
      const auto a = random_pipeline(space, 4, rng);
      const auto b = random_pipeline(space, 4, rng);
      CHECK(valid_in(a, space, 4));
      lengths.insert(a.complexity());
      const auto c = crossover(a, b, 4, rng);
      CHECK(valid_in(c, space, 4));
      const auto m = mutate(c, space, 4, rng);
      CHECK(valid_in(m, space, 4));
    }
    CHECK(lengths == std::set<std::size_t>{1, 2, 3, 4});
    const auto km = OperatorSpace::kmeans_only(2, 10);
    for (int i = 0; i < 1000; ++i) {
      const auto p = mutate(random_pipeline(km, 4, rng), km, 4, rng);
      CHECK(p.complexity() == 1);
      CHECK(valid_in(p, km, 4));
    }
  }

  TEST_CASE("mutation explores the grid") {
    const auto km = OperatorSpace::kmeans_only(2, 10);
    RngStream rng(3, 3);
    std::set<std::int64_t> seen;
    auto p = kmeans_pipeline(6);
    for (int i = 0; i < 500; ++i) {
      p = mutate(p, km, 4, rng);
      seen.insert(p.clusterer().get_int("n_clusters"));
    }
    CHECK(seen.size() == 9);
  }

  TEST_CASE("evolution finds the exhaustive optimum on a small space") {
    const auto space = OperatorSpace::kmeans_only(2, 10);
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto d = generated(100 + seed, 4, 300, 3);
      EvolutionConfig cfg;
      cfg.seed = seed;
      const auto r = evolve(d, {Mode::SilOnly, nullptr}, cfg, space);
      Evaluator ev(d.features, {Mode::SilOnly, nullptr}, seed);
      PipelineSpec best = kmeans_pipeline(2);
      double best_fit = ev.evaluate(best).fitness;
      for (std::int64_t k = 3; k <= 10; ++k) {
        const auto p = kmeans_pipeline(k);
        const double f = ev.evaluate(p).fitness;
        if (better(f, p, best_fit, best)) {
          best = p;
          best_fit = f;
        }
      }
      hits += r.best == best && r.best_evaluation.fitness == best_fit;
    }
    CHECK(hits >= 4);
  }

  TEST_CASE("elitism keeps the best fitness from falling") {
    const auto d = generated(7, 3, 200, 4);
    EvolutionConfig cfg;
    cfg.population_size = 10;
    cfg.generations = 6;
    cfg.seed = 3;
    const auto r = evolve(d, {Mode::SilOnly, nullptr}, cfg, OperatorSpace::full());
    REQUIRE(r.trace.generations.size() == 7);
    for (std::size_t g = 1; g < r.trace.generations.size(); ++g) {
      CHECK(r.trace.generations[g].best_fitness >= r.trace.generations[g - 1].best_fitness);
      CHECK(r.trace.generations[g].generation == static_cast<int>(g));
    }
    CHECK(r.best_evaluation.fitness == r.trace.generations.back().best_fitness);
    CHECK(r.final_population.size() == 10);
    CHECK(r.best_partition.size() == static_cast<std::size_t>(d.rows()));
    CHECK(cvi::silhouette(d, r.best_partition) == doctest::Approx(r.best_evaluation.sil).epsilon(1e-12));
  }

  TEST_CASE("evolution is deterministic and ignores labels") {
    const auto d = generated(8, 3, 150, 3);
    EvolutionConfig cfg;
    cfg.population_size = 8;
    cfg.generations = 3;
    cfg.seed = 11;
    const auto a = evolve(d, {Mode::DbsOnly, nullptr}, cfg, OperatorSpace::full());
    const auto b = evolve(strip_labels(d), {Mode::DbsOnly, nullptr}, cfg, OperatorSpace::full());
    CHECK(a.best == b.best);
    CHECK(a.best_partition == b.best_partition);
    for (std::size_t g = 0; g < a.trace.generations.size(); ++g) {
      const auto& x = a.trace.generations[g];
      const auto& y = b.trace.generations[g];
      CHECK(x.best_fitness == y.best_fitness);
      CHECK(x.mean_complexity == y.mean_complexity);
    }
  }

  TEST_CASE("surrogate-driven fitness") {
    std::vector<Dataset> ds;
    for (std::uint64_t s = 0; s < 4; ++s) ds.push_back(generated(200 + s, 3, 150, 3));
    const auto rows = metabase::build(ds, 20, 1);
    auto model = std::make_shared<const surrogate::SurrogateModel>(
        surrogate::fit(rows, {.n_trees = 20, .layout = surrogate::FeatureLayout::Full}, 2));
    const FitnessMode fm{Mode::Full, model};
    CHECK_NOTHROW(validate(fm));
    CHECK_THROWS_AS(validate(FitnessMode{Mode::CviOnly, model}), Error);
    const auto d = generated(300, 3, 150, 3);
    const auto mu = metafeatures::extract(d);
    RngStream rng(1, 1);
    const auto e = evaluate(kmeans_pipeline(3), d, mu, fm, rng);
    CHECK(e.fitness == model->predict(surrogate::input_vector(*model, mu, e.sil, e.dbs)));
    CHECK(e.fitness >= 0.0);
    CHECK(e.fitness <= 1.0);
  }

  TEST_CASE("trace and label files") {
    const auto dir = test::scratch("optimizer");
    RunTrace t;
    t.generations.push_back({0, 0.5, 0.25, 1.5, kmeans_pipeline(2)});
    write_trace_csv(t, dir / "trace.csv");
    CHECK(test::slurp(dir / "trace.csv") == "generation,best_fitness,mean_fitness,mean_complexity\n0,0.5,0.25,1.5\n");
    write_labels_csv(canonicalize(std::vector<int>{5, 5, 2}), dir / "labels.csv");
    CHECK(test::slurp(dir / "labels.csv") == "row_index,label\n0,0\n1,0\n2,1\n");
  }
}
