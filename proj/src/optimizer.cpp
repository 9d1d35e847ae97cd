#include "poac/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "poac/cvi.hpp"
#include "poac/kernels.hpp"

namespace poac::optimizer {

using estimators::OperatorConfig;
using estimators::OperatorDef;
using estimators::OperatorSpace;
using estimators::PipelineSpec;

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::Full: return "full";
    case Mode::CviOnly: return "cvi";
    case Mode::SilOnly: return "sil";
    case Mode::DbsOnly: return "dbs";
  }
  return "?";
}

Mode mode_from_string(std::string_view name) {
  if (name == "full") return Mode::Full;
  if (name == "cvi" || name == "cvi-only") return Mode::CviOnly;
  if (name == "sil" || name == "sil-only") return Mode::SilOnly;
  if (name == "dbs" || name == "dbs-only") return Mode::DbsOnly;
  throw Error(ErrorCode::ConfigError, "unknown fitness mode '" + std::string(name) + "' (full|cvi|sil|dbs)");
}

void validate(const FitnessMode& fm) {
  if (fm.mode != Mode::Full && fm.mode != Mode::CviOnly) return;
  if (!fm.model) {
    throw Error(ErrorCode::ConfigError, "fitness mode " + std::string(to_string(fm.mode)) + " needs a model");
  }
  const auto expected =
      surrogate::feature_names(fm.mode == Mode::Full ? surrogate::FeatureLayout::Full : surrogate::FeatureLayout::CviOnly);
  if (fm.model->feature_names() != expected) {
    throw Error(ErrorCode::ConfigError, "model features do not match fitness mode " + std::string(to_string(fm.mode)));
  }
}

void validate(const EvolutionConfig& cfg) {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::ConfigError, m); };
  if (cfg.population_size < 4) fail("population_size must be >= 4");
  if (cfg.generations < 0) fail("generations must be >= 0");
  if (!(cfg.crossover_rate >= 0.0 && cfg.crossover_rate <= 1.0)) fail("crossover_rate must be in [0,1]");
  if (!(cfg.mutation_rate >= 0.0 && cfg.mutation_rate <= 1.0)) fail("mutation_rate must be in [0,1]");
  if (cfg.tournament_size < 1) fail("tournament_size must be >= 1");
  if (cfg.max_pipeline_length < 1 || cfg.max_pipeline_length > static_cast<int>(PipelineSpec::kMaxSteps)) {
    fail("max_pipeline_length must be in [1,4]");
  }
  if (!(cfg.eval_timeout_s > 0.0)) fail("eval_timeout_s must be positive");
}

namespace {

Evaluation score(const Partition& p, const Matrix& x, const Matrix* distances,
                 const metafeatures::MetaFeatureVector& mu, const FitnessMode& fm) {
  Evaluation e;
  e.k = p.k;
  if (p.k < 2 || p.k > static_cast<int>(x.rows()) - 1) {
    e.error = "degenerate partition with k=" + std::to_string(p.k);
    return e;
  }
  const auto s = distances ? cvi::internal_scores(x, *distances, p) : cvi::internal_scores(x, p);
  e.sil = s.sil;
  e.dbs = s.dbs;
  double f = kWorstFitness;
  switch (fm.mode) {
    case Mode::Full: f = fm.model->predict(surrogate::input_vector(*fm.model, mu, s.sil, s.dbs)); break;
    case Mode::CviOnly: f = fm.model->predict(surrogate::input_vector(*fm.model, mu, s.sil, s.dbs)); break;
    case Mode::SilOnly: f = s.sil; break;
    case Mode::DbsOnly: f = -s.dbs; break;
  }
  if (std::isnan(f)) {
    e.error = "fitness undefined";
    return e;
  }
  e.fitness = f;
  return e;
}

Evaluation run_candidate(const PipelineSpec& candidate, const Matrix& x, const Matrix* distances,
                         const metafeatures::MetaFeatureVector& mu, const FitnessMode& fm, RngStream& rng,
                         const estimators::Deadline& deadline) {
  try {
    const Partition p = estimators::apply_pipeline(candidate, x, rng, deadline);
    return score(p, x, distances, mu, fm);
  } catch (const Error& err) {
    Evaluation e;
    e.error = err.what();
    return e;
  }
}

}  // namespace

Evaluation evaluate(const PipelineSpec& candidate, const Dataset& dataset, const metafeatures::MetaFeatureVector& mu,
                    const FitnessMode& fm, RngStream& rng, const estimators::Deadline& deadline) {
  validate(fm);
  return run_candidate(candidate, dataset.features, nullptr, mu, fm, rng, deadline);
}

Evaluator::Evaluator(const Matrix& features, FitnessMode fm, std::uint64_t seed, double timeout_s)
    : x_(features), fm_(std::move(fm)), seed_(seed), timeout_s_(timeout_s) {
  validate(fm_);
  if (fm_.mode == Mode::Full) mu_ = metafeatures::extract(x_);
  if (x_.rows() <= kDistanceCacheMaxRows) distances_ = kernels::pairwise_distances(x_);
}

RngStream Evaluator::stream_for(const std::string& key) const { return RngStream(seed_, fnv1a(key)); }

Evaluation Evaluator::compute(const PipelineSpec& candidate) const {
  RngStream rng = stream_for(estimators::pipeline_key(candidate));
  const estimators::Deadline deadline{std::chrono::duration<double>(timeout_s_)};
  return run_candidate(candidate, x_, distances_ ? &*distances_ : nullptr, mu_, fm_, rng, deadline);
}

Evaluation Evaluator::evaluate(const PipelineSpec& candidate) {
  const auto key = estimators::pipeline_key(candidate);
  if (const auto it = cache_.find(key); it != cache_.end()) {
    ++hits_;
    return it->second;
  }
  return cache_.emplace(key, compute(candidate)).first->second;
}

std::vector<Evaluation> Evaluator::evaluate_all(const std::vector<PipelineSpec>& candidates) {
  std::vector<std::size_t> pending;
  std::vector<std::string> keys;
  keys.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    keys.push_back(estimators::pipeline_key(candidates[i]));
    const bool seen = cache_.contains(keys.back()) ||
                      std::any_of(pending.begin(), pending.end(), [&](std::size_t j) { return keys[j] == keys.back(); });
    if (!seen) pending.push_back(i);
  }
  std::vector<Evaluation> fresh(pending.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t t = 0; t < pending.size(); ++t) fresh[t] = compute(candidates[pending[t]]);
  for (std::size_t t = 0; t < pending.size(); ++t) cache_.emplace(keys[pending[t]], std::move(fresh[t]));
  hits_ += candidates.size() - pending.size();
  std::vector<Evaluation> out;
  out.reserve(candidates.size());
  for (const auto& k : keys) out.push_back(cache_.at(k));
  return out;
}

Partition Evaluator::partition(const PipelineSpec& candidate) const {
  RngStream rng = stream_for(estimators::pipeline_key(candidate));
  return estimators::apply_pipeline(candidate, x_, rng);
}

std::size_t Evaluator::cache_size() const { return cache_.size(); }

bool better(double fa, const PipelineSpec& a, double fb, const PipelineSpec& b) {
  if (fa != fb) return fa > fb;
  if (a.complexity() != b.complexity()) return a.complexity() < b.complexity();
  return estimators::pipeline_key(a) < estimators::pipeline_key(b);
}

OperatorConfig random_operator(const OperatorDef& def, RngStream& rng) {
  OperatorConfig op{def.kind, {}};
  for (const auto& g : def.grids) op.hyperparameters[g.name] = g.values[rng.uniform_index(g.values.size())];
  return op;
}

namespace {

const OperatorDef& pick(const std::vector<OperatorDef>& defs, RngStream& rng) {
  return defs[rng.uniform_index(defs.size())];
}

// Keeps the clusterer last and drops the earliest preprocessors beyond the cap.
PipelineSpec repair(std::vector<OperatorConfig> steps, int max_length) {
  std::vector<OperatorConfig> pre;
  std::optional<OperatorConfig> last;
  for (auto& s : steps) {
    if (estimators::is_clusterer(s.kind)) {
      last = std::move(s);
    } else {
      pre.push_back(std::move(s));
    }
  }
  const auto keep = static_cast<std::size_t>(std::max(0, max_length - 1));
  if (pre.size() > keep) pre.erase(pre.begin(), pre.begin() + static_cast<std::ptrdiff_t>(pre.size() - keep));
  pre.push_back(std::move(*last));
  return PipelineSpec(std::move(pre));
}

}  // namespace

PipelineSpec random_pipeline(const OperatorSpace& space, int max_length, RngStream& rng) {
  if (space.clusterers.empty()) throw Error(ErrorCode::ConfigError, "search space has no clusterers");
  int length = 1;
  if (!space.preprocessors.empty() && max_length >= 2 && !rng.bernoulli(0.5)) {
    length = static_cast<int>(rng.uniform_int(2, max_length));
  }
  std::vector<OperatorConfig> steps;
  for (int i = 0; i + 1 < length; ++i) steps.push_back(random_operator(pick(space.preprocessors, rng), rng));
  steps.push_back(random_operator(pick(space.clusterers, rng), rng));
  return PipelineSpec(std::move(steps));
}

PipelineSpec crossover(const PipelineSpec& a, const PipelineSpec& b, int max_length, RngStream& rng) {
  const auto& sa = a.steps();
  const auto& sb = b.steps();
  const auto cut_a = rng.uniform_index(sa.size());  // keep a's preprocessors [0, cut_a)
  const auto cut_b = rng.uniform_index(sb.size());  // take b's steps [cut_b, end)
  std::vector<OperatorConfig> child(sa.begin(), sa.begin() + static_cast<std::ptrdiff_t>(cut_a));
  child.insert(child.end(), sb.begin() + static_cast<std::ptrdiff_t>(cut_b), sb.end());
  return repair(std::move(child), max_length);
}

PipelineSpec mutate(const PipelineSpec& p, const OperatorSpace& space, int max_length, RngStream& rng) {
  auto steps = p.steps();
  const std::size_t n = steps.size();
  const bool can_insert = !space.preprocessors.empty() && static_cast<int>(n) < max_length;
  const bool can_delete = n > 1;

  // Hyperparameters with a grid neighbor: (step, grid).
  std::vector<std::pair<std::size_t, std::size_t>> tunable;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& def = space.def(steps[i].kind);
    for (std::size_t g = 0; g < def.grids.size(); ++g) {
      if (def.grids[g].values.size() > 1) tunable.emplace_back(i, g);
    }
  }

  std::vector<int> moves{0};
  if (can_insert) moves.push_back(1);
  if (can_delete) moves.push_back(2);
  if (!tunable.empty()) moves.push_back(3);
  switch (moves[rng.uniform_index(moves.size())]) {
    case 0: {
      const auto i = rng.uniform_index(n);
      const auto& defs = i + 1 == n ? space.clusterers : space.preprocessors;
      steps[i] = random_operator(pick(defs, rng), rng);
      break;
    }
    case 1: {
      const auto at = rng.uniform_index(n);  // before the clusterer
      steps.insert(steps.begin() + static_cast<std::ptrdiff_t>(at),
                   random_operator(pick(space.preprocessors, rng), rng));
      break;
    }
    case 2: {
      steps.erase(steps.begin() + static_cast<std::ptrdiff_t>(rng.uniform_index(n - 1)));
      break;
    }
    default: {
      const auto [i, g] = tunable[rng.uniform_index(tunable.size())];
      const auto& grid = space.def(steps[i].kind).grids[g];
      auto& value = steps[i].hyperparameters[grid.name];
      const auto pos = static_cast<std::size_t>(std::find(grid.values.begin(), grid.values.end(), value) -
                                                grid.values.begin());
      std::size_t next;
      if (pos >= grid.values.size()) {
        next = rng.uniform_index(grid.values.size());
      } else if (pos == 0) {
        next = 1;
      } else if (pos + 1 == grid.values.size()) {
        next = pos - 1;
      } else {
        next = rng.bernoulli(0.5) ? pos + 1 : pos - 1;
      }
      value = grid.values[next];
      break;
    }
  }
  return PipelineSpec(std::move(steps));
}

namespace {

GenerationStats stats_of(int generation, const std::vector<Individual>& pop) {
  std::size_t best = 0;
  std::vector<double> finite;
  std::vector<double> complexity;
  for (std::size_t i = 0; i < pop.size(); ++i) {
    if (better(pop[i].fitness, pop[i].spec, pop[best].fitness, pop[best].spec)) best = i;
    if (std::isfinite(pop[i].fitness)) finite.push_back(pop[i].fitness);
    complexity.push_back(static_cast<double>(pop[i].spec.complexity()));
  }
  const double mean_fitness = finite.empty() ? std::numeric_limits<double>::quiet_NaN()
                                             : kernels::ordered_sum(finite) / static_cast<double>(finite.size());
  return GenerationStats{generation, pop[best].fitness, mean_fitness,
                         kernels::ordered_sum(complexity) / static_cast<double>(complexity.size()), pop[best].spec};
}

const Individual& tournament(const std::vector<Individual>& pop, int size, RngStream& rng) {
  const Individual* winner = &pop[rng.uniform_index(pop.size())];
  for (int i = 1; i < size; ++i) {
    const Individual& c = pop[rng.uniform_index(pop.size())];
    if (better(c.fitness, c.spec, winner->fitness, winner->spec)) winner = &c;
  }
  return *winner;
}

}  // namespace

EvolutionResult evolve(const Dataset& dataset, const FitnessMode& fm, const EvolutionConfig& cfg,
                       const OperatorSpace& space) {
  validate(cfg);
  validate(fm);
  if (space.clusterers.empty()) throw Error(ErrorCode::ConfigError, "search space has no clusterers");
  Evaluator evaluator(dataset.features, fm, cfg.seed, cfg.eval_timeout_s);
  RngStream rng(cfg.seed, 0xE7017E);
  const auto pop_size = static_cast<std::size_t>(cfg.population_size);

  auto assess = [&](std::vector<PipelineSpec> specs) {
    const auto evals = evaluator.evaluate_all(specs);
    std::vector<Individual> pop;
    pop.reserve(specs.size());
    for (std::size_t i = 0; i < specs.size(); ++i) pop.push_back({std::move(specs[i]), evals[i].fitness});
    return pop;
  };

  std::vector<PipelineSpec> initial;
  for (std::size_t i = 0; i < pop_size; ++i) initial.push_back(random_pipeline(space, cfg.max_pipeline_length, rng));
  std::vector<Individual> pop = assess(std::move(initial));

  EvolutionResult result{pop.front().spec, {}, {}, {}, {}};
  double best_fitness = kWorstFitness;
  bool have_best = false;
  for (int g = 0;; ++g) {
    auto s = stats_of(g, pop);
    if (!have_best || better(s.best_fitness, s.best, best_fitness, result.best)) {
      result.best = s.best;
      best_fitness = s.best_fitness;
      have_best = true;
    }
    result.trace.generations.push_back(std::move(s));
    if (g == cfg.generations) break;

    std::vector<PipelineSpec> offspring;
    offspring.push_back(result.trace.generations.back().best);
    while (offspring.size() < pop_size) {
      PipelineSpec child = tournament(pop, cfg.tournament_size, rng).spec;
      if (rng.bernoulli(cfg.crossover_rate)) {
        child = crossover(child, tournament(pop, cfg.tournament_size, rng).spec, cfg.max_pipeline_length, rng);
      }
      if (rng.bernoulli(cfg.mutation_rate)) child = mutate(child, space, cfg.max_pipeline_length, rng);
      offspring.push_back(std::move(child));
    }
    pop = assess(std::move(offspring));
  }
  result.best_evaluation = evaluator.evaluate(result.best);
  if (std::isfinite(result.best_evaluation.fitness)) result.best_partition = evaluator.partition(result.best);
  result.final_population = std::move(pop);
  return result;
}

void write_trace_csv(const RunTrace& trace, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "generation,best_fitness,mean_fitness,mean_complexity\n";
  for (const auto& g : trace.generations) {
    out << g.generation << ',' << format_double(g.best_fitness) << ',' << format_double(g.mean_fitness) << ','
        << format_double(g.mean_complexity) << '\n';
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  f << out.str();
}

void write_labels_csv(const Partition& p, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "row_index,label\n";
  for (std::size_t i = 0; i < p.assignments.size(); ++i) out << i << ',' << p.assignments[i] << '\n';
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  f << out.str();
}

}  // namespace poac::optimizer
