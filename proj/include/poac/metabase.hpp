#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "poac/core.hpp"
#include "poac/metafeatures.hpp"
#include "poac/rng.hpp"

namespace poac::metabase {

/// One augmented partition of one dataset.
struct MetaBaseRow {
  std::string dataset_id;
  double noise_level = 0.0;
  metafeatures::MetaFeatureVector metafeatures;
  double sil = 0.0;  // NaN when undefined
  double dbs = 0.0;  // NaN when undefined, +inf for coincident centroids
  double ari = 0.0;
};

inline constexpr int kDefaultCorruptions = 100;

/// Each point keeps its label with probability 1 - noise_level, otherwise
/// its label is redrawn uniformly from all k labels, so noise 1 is chance level. Throws DegenerateTruth for
/// k < 2 and InvalidInput for noise outside [0,1].
Partition corrupt_labels(const Partition& truth, double noise_level, RngStream& rng);

/// Noise grid {j/(c-1)}; a single level is 0.
std::vector<double> noise_grid(int corruptions);

/// Rows for one dataset, ordered by noise level. Stream ids derive from
/// (seed, dataset_index, level).
std::vector<MetaBaseRow> build_one(const Dataset& dataset, std::size_t dataset_index,
                                   int corruptions, std::uint64_t seed);

/// Rows for all datasets in input order. Throws MissingLabels for an
/// unlabeled dataset.
std::vector<MetaBaseRow> build(const std::vector<Dataset>& datasets, int corruptions, std::uint64_t seed);

/// Loads every dataset listed in <dir>/manifest.csv (or the CSV files of dir
/// in name order when there is no manifest) and builds the meta-base, one
/// dataset in memory at a time.
std::vector<MetaBaseRow> build_from_directory(const std::filesystem::path& dir, int corruptions,
                                              std::uint64_t seed);

/// Header: dataset_id, noise_level, 38 meta-feature names, sil, dbs, ari.
std::string csv_header();
void write_csv(const std::vector<MetaBaseRow>& rows, const std::filesystem::path& path);
std::vector<MetaBaseRow> read_csv(const std::filesystem::path& path);

}  // namespace poac::metabase
