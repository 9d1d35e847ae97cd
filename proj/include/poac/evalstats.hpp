#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "poac/core.hpp"
#include "poac/estimators.hpp"
#include "poac/optimizer.hpp"

namespace poac::evalstats {

struct ResultRow {
  std::string dataset_id;
  std::string method;
  int rep = 0;
  double ari = 0.0;
  double sil = 0.0;
  double dbs = 0.0;
  int complexity = 0;
  double runtime_s = 0.0;
};

struct ResultTable {
  std::vector<ResultRow> rows;
};

struct AblationRun {
  std::string method;  // column value in the result table
  optimizer::FitnessMode fitness;
};

/// Evolves one pipeline per (dataset, run, rep) on the unlabeled features,
/// then scores the best partition against the labels. Rows are ordered by
/// dataset, run, rep. A failed run yields a row with NaN scores. The observer,
/// if given, sees every finished evolution with its row index; it may be
/// called concurrently.
using AblationObserver = std::function<void(std::size_t row, const optimizer::EvolutionResult&)>;
ResultTable run_ablation(const std::vector<Dataset>& datasets, const std::vector<AblationRun>& runs, int reps,
                         const optimizer::EvolutionConfig& cfg, const estimators::OperatorSpace& space,
                         const AblationObserver& observe = {});

struct FriedmanResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::vector<double> mean_ranks;  // rank 1 = highest score
};

/// Average ranks within each row (ties share the mean rank). Throws
/// MissingData on NaN, ConfigError for fewer than 2 rows or columns.
std::vector<double> average_ranks(const Matrix& scores);
FriedmanResult friedman(const Matrix& scores);

/// q * sqrt(k(k+1)/(6N)) with tabulated q for alpha 0.05 and 0.10, k = 2..10.
double nemenyi_q(int k, double alpha);
double nemenyi_cd(int k, int n, double alpha = 0.05);

/// significant[i][j] = |rank_i - rank_j| > cd.
std::vector<std::vector<bool>> nemenyi_significance(const std::vector<double>& mean_ranks, double cd);

struct MethodSummary {
  std::string method;
  double mean_ari = 0.0;
  double mean_sil = 0.0;
  double mean_dbs = 0.0;
  double mean_complexity = 0.0;
  std::size_t rows = 0;
  std::size_t excluded = 0;  // rows with a non-finite score
};

/// Per-method means over rows with finite scores, sorted by method name.
/// Throws EmptyTable.
std::vector<MethodSummary> summarize(const ResultTable& table);

/// Methods (sorted) and an N x k matrix of per-dataset mean ARI over reps.
/// Datasets missing a method or with no finite ARI for one are dropped.
struct PairedScores {
  std::vector<std::string> methods;
  std::vector<std::string> datasets;
  Matrix scores;
};
PairedScores paired_ari(const ResultTable& table);

/// Plain-text report: per-method means, Friedman statistic and p-value,
/// Nemenyi CD, mean ranks and the pairwise significance matrix.
std::string stats_report(const ResultTable& table, double alpha);

void write_results_csv(const ResultTable& table, const std::filesystem::path& path);
ResultTable read_results_csv(const std::filesystem::path& path);

}  // namespace poac::evalstats
