#include "poac/core.hpp"
#include "poac/parallel.hpp"

#include <omp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

namespace poac {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidPartition: return "InvalidPartition";
    case ErrorCode::InvalidDataset: return "InvalidDataset";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::SpecError: return "SpecError";
    case ErrorCode::UndefinedCvi: return "UndefinedCvi";
    case ErrorCode::ShapeError: return "ShapeError";
    case ErrorCode::TooFewInstances: return "TooFewInstances";
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::InfeasibleK: return "InfeasibleK";
    case ErrorCode::SolverError: return "SolverError";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::DegenerateTruth: return "DegenerateTruth";
    case ErrorCode::MissingLabels: return "MissingLabels";
    case ErrorCode::FitError: return "FitError";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::InvariantError: return "InvariantError";
    case ErrorCode::MissingData: return "MissingData";
    case ErrorCode::EmptyTable: return "EmptyTable";
  }
  return "Error";
}

void set_num_threads(int n) {
  omp_set_num_threads(n > 0 ? n : omp_get_num_procs());
}

int num_threads() { return omp_get_max_threads(); }

int threads_from_env() {
  const char* v = std::getenv("POAC_THREADS");
  if (v == nullptr) return 0;
  int n = 0;
  const auto* end = v + std::char_traits<char>::length(v);
  auto [ptr, ec] = std::from_chars(v, end, n);
  if (ec != std::errc() || ptr != end || n < 1) return 0;
  return n;
}

std::vector<std::size_t> Partition::cluster_sizes() const {
  std::vector<std::size_t> sizes(static_cast<std::size_t>(std::max(k, 0)), 0);
  for (const int a : assignments) {
    if (a >= 0 && a < k) ++sizes[static_cast<std::size_t>(a)];
  }
  return sizes;
}

Partition canonicalize(std::span<const int> assignments, NoisePolicy noise) {
  if (assignments.empty()) throw Error(ErrorCode::InvalidPartition, "empty assignment sequence");
  Partition out;
  out.assignments.resize(assignments.size());
  std::unordered_map<int, int> remap;
  int next = 0;
  int noise_id = -1;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    const int a = assignments[i];
    if (a == -1) {
      if (noise == NoisePolicy::Singletons) {
        out.assignments[i] = next++;
      } else {
        if (noise_id < 0) noise_id = next++;
        out.assignments[i] = noise_id;
      }
      continue;
    }
    if (a < 0) throw Error(ErrorCode::InvalidPartition, "negative cluster id " + std::to_string(a));
    auto [it, inserted] = remap.try_emplace(a, next);
    if (inserted) ++next;
    out.assignments[i] = it->second;
  }
  out.k = next;
  return out;
}

bool is_canonical(const Partition& p) {
  if (p.assignments.empty() || p.k < 1) return false;
  std::vector<char> seen(static_cast<std::size_t>(p.k), 0);
  for (const int a : p.assignments) {
    if (a < 0 || a >= p.k) return false;
    seen[static_cast<std::size_t>(a)] = 1;
  }
  return std::all_of(seen.begin(), seen.end(), [](char s) { return s != 0; });
}

void require_canonical(const Partition& p) {
  if (!is_canonical(p)) throw Error(ErrorCode::InvalidPartition, "partition is not canonical");
}

Partition compact_labels(std::span<const int> labels) {
  if (labels.empty()) throw Error(ErrorCode::InvalidPartition, "empty label sequence");
  std::map<int, int> ids;
  for (const int l : labels) {
    if (l < 0) throw Error(ErrorCode::InvalidDataset, "negative label " + std::to_string(l));
    ids.emplace(l, 0);
  }
  int next = 0;
  for (auto& [_, v] : ids) v = next++;
  Partition out;
  out.k = next;
  out.assignments.reserve(labels.size());
  for (const int l : labels) out.assignments.push_back(ids.at(l));
  return out;
}

Dataset make_dataset(std::string id, Matrix features, std::optional<std::vector<int>> labels) {
  if (features.rows() < 2) throw Error(ErrorCode::InvalidDataset, "need at least 2 rows");
  if (features.cols() < 1) throw Error(ErrorCode::InvalidDataset, "need at least 1 column");
  if (!features.allFinite()) throw Error(ErrorCode::InvalidDataset, "non-finite feature value");
  Dataset d{std::move(id), std::move(features), std::nullopt};
  if (labels) {
    if (static_cast<Eigen::Index>(labels->size()) != d.features.rows()) {
      throw Error(ErrorCode::InvalidDataset, "label count does not match row count");
    }
    d.labels = compact_labels(*labels);
  }
  return d;
}

Dataset strip_labels(const Dataset& d) { return Dataset{d.id, d.features, std::nullopt}; }

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

double parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
    text.remove_suffix(1);
  }
  if (text.empty()) throw Error(ErrorCode::ParseError, "missing value");
  if (text == "nan" || text == "NaN") return std::numeric_limits<double>::quiet_NaN();
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const char* first = text.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::ParseError, "not a number: '" + std::string(text) + "'");
  }
  return v;
}

std::vector<std::string_view> split_csv_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return cells;
}

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, path.string() + ": missing header");
  std::vector<std::string> header;
  for (const auto cell : split_csv_line(line)) header.emplace_back(cell);
  const bool has_label = !header.empty() && header.back() == "label";
  const std::size_t n_features = header.size() - (has_label ? 1 : 0);
  if (n_features < 1) throw Error(ErrorCode::ParseError, path.string() + ": no feature columns");

  std::vector<double> values;
  std::vector<int> labels;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    ++row;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::ParseError, path.string() + ": row " + std::to_string(row) + " has " +
                                             std::to_string(cells.size()) + " cells, expected " +
                                             std::to_string(header.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      double v = 0.0;
      try {
        v = parse_double(cells[c]);
      } catch (const Error& e) {
        throw Error(ErrorCode::ParseError, path.string() + ": row " + std::to_string(row) +
                                               ", column " + std::to_string(c + 1) + " (" +
                                               header[c] + "): " + e.detail());
      }
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::ParseError, path.string() + ": row " + std::to_string(row) +
                                               ", column " + std::to_string(c + 1) +
                                               ": non-finite value");
      }
      if (has_label && c + 1 == cells.size()) {
        if (v != std::floor(v) || v < 0) {
          throw Error(ErrorCode::ParseError, path.string() + ": row " + std::to_string(row) +
                                                 ": label must be a non-negative integer");
        }
        labels.push_back(static_cast<int>(v));
      } else {
        values.push_back(v);
      }
    }
  }
  const auto n = static_cast<Eigen::Index>(row);
  Matrix features = Eigen::Map<const Matrix>(values.data(), n, static_cast<Eigen::Index>(n_features));
  std::optional<std::vector<int>> maybe_labels;
  if (has_label) maybe_labels = std::move(labels);
  return make_dataset(path.stem().string(), std::move(features), std::move(maybe_labels));
}

void save_csv(const Dataset& dataset, const std::filesystem::path& path) {
  std::ostringstream out;
  const auto p = dataset.cols();
  for (Eigen::Index j = 0; j < p; ++j) {
    if (j > 0) out << ',';
    out << 'f' << j;
  }
  if (dataset.labels) out << ",label";
  out << '\n';
  for (Eigen::Index i = 0; i < dataset.rows(); ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      if (j > 0) out << ',';
      out << format_double(dataset.features(i, j));
    }
    if (dataset.labels) out << ',' << dataset.labels->assignments[static_cast<std::size_t>(i)];
    out << '\n';
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  file << out.str();
  if (!file) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

}  // namespace poac
