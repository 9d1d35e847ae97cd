#pragma once

#include <filesystem>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "poac/core.hpp"
#include "poac/estimators.hpp"
#include "poac/metafeatures.hpp"
#include "poac/surrogate.hpp"

namespace poac::optimizer {

enum class Mode { Full, CviOnly, SilOnly, DbsOnly };

std::string_view to_string(Mode mode);
Mode mode_from_string(std::string_view name);

struct FitnessMode {
  Mode mode = Mode::SilOnly;
  std::shared_ptr<const surrogate::SurrogateModel> model;  // Full and CviOnly only
};

/// Throws ConfigError when the model is missing or has the wrong layout.
void validate(const FitnessMode& fm);

struct EvolutionConfig {
  int population_size = 24;
  int generations = 10;
  double crossover_rate = 0.5;
  double mutation_rate = 0.9;
  int tournament_size = 3;
  int max_pipeline_length = 4;
  double eval_timeout_s = 30.0;
  std::uint64_t seed = 0;
};

/// Throws ConfigError.
void validate(const EvolutionConfig& cfg);

inline constexpr double kWorstFitness = -std::numeric_limits<double>::infinity();
/// Above this row count SIL is computed without a stored distance matrix.
inline constexpr Eigen::Index kDistanceCacheMaxRows = 3000;

struct Evaluation {
  double fitness = kWorstFitness;
  double sil = std::numeric_limits<double>::quiet_NaN();
  double dbs = std::numeric_limits<double>::quiet_NaN();
  int k = 0;
  std::string error;  // empty when the pipeline ran and the partition was usable
};

/// Fitness of one candidate. Errors, timeouts and partitions with k < 2 or
/// k > n-1 give kWorstFitness and a reason instead of throwing.
Evaluation evaluate(const estimators::PipelineSpec& candidate, const Dataset& dataset,
                    const metafeatures::MetaFeatureVector& mu, const FitnessMode& fm, RngStream& rng,
                    const estimators::Deadline& deadline = {});

/// Memoizing evaluator over one dataset. Each candidate's randomness is
/// derived from (seed, pipeline key), so results do not depend on evaluation
/// order or thread count.
class Evaluator {
 public:
  Evaluator(const Matrix& features, FitnessMode fm, std::uint64_t seed, double timeout_s = 30.0);

  Evaluation evaluate(const estimators::PipelineSpec& candidate);
  /// Evaluates every uncached candidate in parallel; returns results in input order.
  std::vector<Evaluation> evaluate_all(const std::vector<estimators::PipelineSpec>& candidates);
  /// The partition the candidate produced during evaluation (recomputed).
  Partition partition(const estimators::PipelineSpec& candidate) const;

  std::size_t cache_size() const;
  std::size_t cache_hits() const noexcept { return hits_; }
  const metafeatures::MetaFeatureVector& mu() const noexcept { return mu_; }

 private:
  Evaluation compute(const estimators::PipelineSpec& candidate) const;
  RngStream stream_for(const std::string& key) const;

  const Matrix& x_;
  FitnessMode fm_;
  std::uint64_t seed_;
  double timeout_s_;
  metafeatures::MetaFeatureVector mu_;
  std::optional<Matrix> distances_;
  std::map<std::string, Evaluation> cache_;
  std::size_t hits_ = 0;
};

/// Strict ranking: fitness descending, then fewer steps, then pipeline key.
bool better(double fa, const estimators::PipelineSpec& a, double fb, const estimators::PipelineSpec& b);

struct Individual {
  estimators::PipelineSpec spec;
  double fitness = kWorstFitness;
};

struct GenerationStats {
  int generation = 0;
  double best_fitness = kWorstFitness;
  double mean_fitness = 0.0;  // over finite fitnesses; NaN if none
  double mean_complexity = 0.0;
  estimators::PipelineSpec best;
};

struct RunTrace {
  std::vector<GenerationStats> generations;
};

struct EvolutionResult {
  estimators::PipelineSpec best;
  Evaluation best_evaluation;
  Partition best_partition;
  RunTrace trace;
  std::vector<Individual> final_population;
};

/// Runs cfg.generations rounds of variation after a random generation 0.
/// Labels of the dataset, if any, are ignored.
EvolutionResult evolve(const Dataset& dataset, const FitnessMode& fm, const EvolutionConfig& cfg,
                       const estimators::OperatorSpace& space);

// Variation operators, exposed for property tests. All return valid pipelines
// whose steps come from the space.
estimators::OperatorConfig random_operator(const estimators::OperatorDef& def, RngStream& rng);
estimators::PipelineSpec random_pipeline(const estimators::OperatorSpace& space, int max_length, RngStream& rng);
estimators::PipelineSpec crossover(const estimators::PipelineSpec& a, const estimators::PipelineSpec& b,
                                   int max_length, RngStream& rng);
estimators::PipelineSpec mutate(const estimators::PipelineSpec& p, const estimators::OperatorSpace& space,
                                int max_length, RngStream& rng);

/// generation,best_fitness,mean_fitness,mean_complexity
void write_trace_csv(const RunTrace& trace, const std::filesystem::path& path);
/// row_index,label
void write_labels_csv(const Partition& p, const std::filesystem::path& path);

}  // namespace poac::optimizer
