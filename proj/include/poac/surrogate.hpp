#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "poac/core.hpp"
#include "poac/metabase.hpp"

namespace poac::surrogate {

/// Which meta-base columns feed the forest.
enum class FeatureLayout {
  Full,     // 38 meta-features, sil, dbs
  CviOnly,  // sil, dbs
};

std::vector<std::string> feature_names(FeatureLayout layout);

struct ForestParams {
  int n_trees = 100;
  bool bootstrap = true;
  int max_features = 0;  // 0 selects max(1, floor(F/3))
  FeatureLayout layout = FeatureLayout::Full;
};

inline constexpr std::size_t kMinTrainingRows = 50;

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct Tree {
  std::vector<TreeNode> nodes;  // node 0 is the root

  double predict(std::span<const double> x) const;
};

class SurrogateModel {
 public:
  SurrogateModel(std::vector<std::string> feature_names, std::vector<double> imputation,
                 std::vector<Tree> trees, std::vector<double> importances);

  const std::vector<std::string>& feature_names() const noexcept { return names_; }
  const std::vector<double>& imputation() const noexcept { return imputation_; }
  const std::vector<Tree>& trees() const noexcept { return trees_; }
  const std::vector<double>& importances() const noexcept { return importances_; }
  std::size_t n_features() const noexcept { return names_.size(); }

  /// Mean tree output after imputing NaN entries. Throws ShapeError on a
  /// length mismatch.
  double predict(std::span<const double> features) const;
  std::vector<double> predict(const Matrix& x) const;

 private:
  std::vector<std::string> names_;
  std::vector<double> imputation_;
  std::vector<Tree> trees_;
  std::vector<double> importances_;
};

/// Model input for one candidate: each feature name resolved against mu,
/// "sil" and "dbs".
std::vector<double> input_vector(const SurrogateModel& model, const metafeatures::MetaFeatureVector& mu,
                                 double sil, double dbs);

struct TrainingData {
  std::vector<std::string> names;
  Matrix x;
  std::vector<double> y;
  std::vector<std::string> groups;
};

TrainingData training_data(const std::vector<metabase::MetaBaseRow>& rows, FeatureLayout layout);

/// Random-forest regression. Throws InvalidInput for fewer than 50 rows or
/// non-finite targets, FitError for an all-NaN column.
SurrogateModel fit(const std::vector<std::string>& names, const Matrix& x, const std::vector<double>& y,
                   const ForestParams& params, std::uint64_t seed);
SurrogateModel fit(const std::vector<metabase::MetaBaseRow>& rows, const ForestParams& params,
                   std::uint64_t seed);

struct FoldScore {
  double r2 = 0.0;
  double mse = 0.0;
  std::size_t test_rows = 0;
};

struct CvReport {
  double r2 = 0.0;
  double mse = 0.0;
  std::vector<FoldScore> fold_scores;
};

/// Coefficient of determination; 1 when both residual and total sums are 0,
/// 0 when only the total sum is.
double r2_score(std::span<const double> truth, std::span<const double> predicted);

/// K-fold cross-validation. With grouped = true all rows sharing a group go
/// to the same fold. Throws ConfigError for folds < 2 or too few groups.
CvReport cross_validate(const TrainingData& data, const ForestParams& params, int folds, std::uint64_t seed,
                        bool grouped = true);
CvReport cross_validate(const std::vector<metabase::MetaBaseRow>& rows, const ForestParams& params,
                        int folds, std::uint64_t seed, bool grouped = true);

/// (name, importance) pairs, highest first.
std::vector<std::pair<std::string, double>> feature_importance(const SurrogateModel& model);

inline constexpr int kSchemaVersion = 1;

/// Versioned JSON model file. save throws InvariantError for a model without
/// trees; load throws FormatError for anything malformed.
void save(const SurrogateModel& model, const std::filesystem::path& path);
SurrogateModel load(const std::filesystem::path& path);

/// CV report as CSV: fold,r2,mse,test_rows then a "mean" summary row.
void write_cv_csv(const CvReport& report, const std::filesystem::path& path);

}  // namespace poac::surrogate
