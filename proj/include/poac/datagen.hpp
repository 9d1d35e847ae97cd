#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "poac/core.hpp"
#include "poac/rng.hpp"

namespace poac::datagen {

enum class Distribution { Normal, Exponential, Gumbel };

std::string_view to_string(Distribution d);
Distribution distribution_from_string(std::string_view name);

/// Parameters of one synthetic clustering problem.
struct DatasetSpec {
  int dims = 2;
  int clusters = 2;
  int samples = 150;
  double overlap = 1e-6;
  double aspect_ref = 1.5;
  double aspect_max_min = 1.0;
  double radius_max_min = 1.0;
  Distribution distribution = Distribution::Normal;
  double imbalance_ratio = 1.0;
  std::uint64_t seed = 0;
};

/// Throws SpecError when a field is outside its admissible range.
void validate(const DatasetSpec& spec);

template <typename T>
struct Range {
  T lo;
  T hi;
};

struct DatasetSpecRanges {
  Range<int> dims{2, 100};
  Range<int> clusters{2, 35};
  Range<int> samples{150, 5000};
  Range<double> overlap{1e-6, 1e-5};
  Range<double> aspect_ref{1.5, 5.0};
  Range<double> aspect_max_min{1.0, 5.0};
  Range<double> radius_max_min{1.0, 5.0};
  std::vector<Distribution> distributions{Distribution::Normal, Distribution::Exponential,
                                          Distribution::Gumbel};
  Range<double> imbalance_ratio{1.0, 3.0};

  /// Training problem space.
  static DatasetSpecRanges training();
  /// Validation group: wider shape knobs.
  static DatasetSpecRanges validation();
  /// "training", "validation" or a JSON file overriding fields of training().
  static DatasetSpecRanges from_name_or_file(const std::string& name_or_path);
};

/// Throws ConfigError on an empty/inverted range.
void validate(const DatasetSpecRanges& ranges);

/// Uniform draw per field (log-uniform for overlap); clusters is capped at
/// samples / 2.
DatasetSpec sample_spec(const DatasetSpecRanges& ranges, RngStream& rng);

/// Cluster sizes by geometric interpolation between s_min and
/// imbalance_ratio * s_min, summing to samples.
std::vector<int> cluster_sizes(int samples, int clusters, double imbalance_ratio);

/// Target minimum standardized center gap for an overlap level.
double target_gap(double overlap);

/// Pure function of spec.
Dataset generate(const DatasetSpec& spec, const std::string& id = "synthetic");

struct ManifestEntry {
  std::string id;
  DatasetSpec spec;
};

/// Writes count datasets plus manifest.csv into out; returns the manifest rows.
std::vector<ManifestEntry> generate_corpus(int count, const DatasetSpecRanges& ranges,
                                           std::uint64_t seed, const std::filesystem::path& out);

/// Specs only, same draws as generate_corpus.
std::vector<ManifestEntry> sample_corpus_specs(int count, const DatasetSpecRanges& ranges,
                                               std::uint64_t seed);

void write_manifest(const std::vector<ManifestEntry>& entries, const std::filesystem::path& path);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

/// Dataset files of a corpus directory: the manifest order when
/// manifest.csv exists, else every *.csv in name order.
std::vector<std::filesystem::path> list_corpus(const std::filesystem::path& dir);

}  // namespace poac::datagen
