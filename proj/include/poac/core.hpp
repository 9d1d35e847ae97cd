#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "poac/error.hpp"

namespace poac {

/// Row-major so that one sample is one contiguous row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// How ids equal to -1 (noise) are treated by canonicalize().
enum class NoisePolicy {
  Singletons,  // every noise point becomes its own cluster
  Grouped,     // all noise points share one fresh cluster
};

/// Cluster assignment per row. A canonical partition uses exactly the ids
/// {0..k-1}, each non-empty.
struct Partition {
  std::vector<int> assignments;
  int k = 0;

  std::size_t size() const noexcept { return assignments.size(); }
  std::vector<std::size_t> cluster_sizes() const;

  bool operator==(const Partition&) const = default;
};

/// Relabels ids by order of first appearance.
Partition canonicalize(std::span<const int> assignments,
                       NoisePolicy noise = NoisePolicy::Singletons);
inline Partition canonicalize(const Partition& p,
                              NoisePolicy noise = NoisePolicy::Singletons) {
  return canonicalize(p.assignments, noise);
}

/// True when ids are exactly {0..k-1} and every cluster is non-empty.
bool is_canonical(const Partition& p);

/// Throws InvalidPartition unless is_canonical(p).
void require_canonical(const Partition& p);

/// Maps arbitrary non-negative ids onto {0..k-1} preserving their numeric
/// order, so contiguous label sets are left untouched.
Partition compact_labels(std::span<const int> labels);

struct Dataset {
  std::string id;
  Matrix features;
  std::optional<Partition> labels;

  Eigen::Index rows() const noexcept { return features.rows(); }
  Eigen::Index cols() const noexcept { return features.cols(); }
};

/// Validates shape/finiteness and compacts labels.
Dataset make_dataset(std::string id, Matrix features, std::optional<std::vector<int>> labels = {});

/// Copy with the label column removed.
Dataset strip_labels(const Dataset& d);

Dataset load_csv(const std::filesystem::path& path);
void save_csv(const Dataset& dataset, const std::filesystem::path& path);

/// Shortest round-trip text for a double; "nan", "inf", "-inf" for non-finite.
std::string format_double(double v);
/// Inverse of format_double; throws ParseError.
double parse_double(std::string_view text);

/// Splits one CSV line on commas (no quoting; the formats here never need it).
std::vector<std::string_view> split_csv_line(std::string_view line);

}  // namespace poac
