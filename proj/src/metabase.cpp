#include "poac/metabase.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "poac/cvi.hpp"
#include "poac/datagen.hpp"
#include "poac/kernels.hpp"

namespace poac::metabase {

Partition corrupt_labels(const Partition& truth, double noise_level, RngStream& rng) {
  require_canonical(truth);
  if (truth.k < 2) throw Error(ErrorCode::DegenerateTruth, "corruption needs at least 2 true clusters");
  if (!(noise_level >= 0.0 && noise_level <= 1.0)) {
    throw Error(ErrorCode::InvalidInput, "noise level must be in [0,1]");
  }
  std::vector<int> labels = truth.assignments;
  for (auto& l : labels) {
    if (!rng.bernoulli(noise_level)) continue;
    l = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(truth.k)));
  }
  return canonicalize(labels);
}

std::vector<double> noise_grid(int corruptions) {
  if (corruptions < 1) throw Error(ErrorCode::ConfigError, "corruptions must be >= 1");
  std::vector<double> grid(static_cast<std::size_t>(corruptions), 0.0);
  for (int j = 1; j < corruptions; ++j) {
    grid[static_cast<std::size_t>(j)] = static_cast<double>(j) / (corruptions - 1);
  }
  return grid;
}

std::vector<MetaBaseRow> build_one(const Dataset& dataset, std::size_t dataset_index,
                                   int corruptions, std::uint64_t seed) {
  if (!dataset.labels) throw Error(ErrorCode::MissingLabels, "dataset " + dataset.id + " has no labels");
  const auto grid = noise_grid(corruptions);
  const auto mu = metafeatures::extract(dataset.features);
  const Matrix distances = kernels::pairwise_distances(dataset.features);
  const RngStream root = RngStream(seed, 0x3E7AB45E).derive(dataset_index);
  const Partition& truth = *dataset.labels;

  std::vector<MetaBaseRow> rows(grid.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t level = 0; level < grid.size(); ++level) {
    RngStream rng = root.derive(level);
    const Partition corrupted = corrupt_labels(truth, grid[level], rng);
    const auto scores = cvi::internal_scores(dataset.features, distances, corrupted);
    rows[level] = MetaBaseRow{dataset.id, grid[level], mu, scores.sil, scores.dbs,
                              cvi::adjusted_rand_index(truth, corrupted)};
  }
  return rows;
}

std::vector<MetaBaseRow> build(const std::vector<Dataset>& datasets, int corruptions, std::uint64_t seed) {
  for (const auto& d : datasets) {
    if (!d.labels) throw Error(ErrorCode::MissingLabels, "dataset " + d.id + " has no labels");
  }
  std::vector<MetaBaseRow> rows;
  for (std::size_t i = 0; i < datasets.size(); ++i) {
    auto part = build_one(datasets[i], i, corruptions, seed);
    rows.insert(rows.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const MetaBaseRow& a, const MetaBaseRow& b) { return a.dataset_id < b.dataset_id; });
  return rows;
}

std::vector<MetaBaseRow> build_from_directory(const std::filesystem::path& dir, int corruptions,
                                              std::uint64_t seed) {
  const auto files = datagen::list_corpus(dir);
  if (files.empty()) throw Error(ErrorCode::ConfigError, "no datasets found in " + dir.string());
  std::vector<MetaBaseRow> rows;
  for (std::size_t i = 0; i < files.size(); ++i) {
    auto part = build_one(load_csv(files[i]), i, corruptions, seed);
    rows.insert(rows.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return rows;
}

std::string csv_header() {
  std::string h = "dataset_id,noise_level";
  for (const auto name : metafeatures::kNames) {
    h += ',';
    h += name;
  }
  h += ",sil,dbs,ari";
  return h;
}

void write_csv(const std::vector<MetaBaseRow>& rows, const std::filesystem::path& path) {
  std::ostringstream out;
  out << csv_header() << '\n';
  for (const auto& r : rows) {
    out << r.dataset_id << ',' << format_double(r.noise_level);
    for (const double v : r.metafeatures.values) out << ',' << format_double(v);
    out << ',' << format_double(r.sil) << ',' << format_double(r.dbs) << ',' << format_double(r.ari) << '\n';
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  f << out.str();
  if (!f) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

std::vector<MetaBaseRow> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != csv_header()) throw Error(ErrorCode::FormatError, path.string() + ": unexpected meta-base header");
  std::vector<MetaBaseRow> rows;
  constexpr std::size_t expected = 2 + metafeatures::kCount + 3;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != expected) {
      throw Error(ErrorCode::FormatError, path.string() + ": line " + std::to_string(line_no) + " has " +
                                              std::to_string(cells.size()) + " cells");
    }
    MetaBaseRow r;
    r.dataset_id = std::string(cells[0]);
    r.noise_level = parse_double(cells[1]);
    for (std::size_t j = 0; j < metafeatures::kCount; ++j) r.metafeatures.values[j] = parse_double(cells[2 + j]);
    r.sil = parse_double(cells[2 + metafeatures::kCount]);
    r.dbs = parse_double(cells[3 + metafeatures::kCount]);
    r.ari = parse_double(cells[4 + metafeatures::kCount]);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace poac::metabase
