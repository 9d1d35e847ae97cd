#include "poac/datagen.hpp"

#include <Eigen/QR>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include "poac/special.hpp"

namespace poac::datagen {

std::string_view to_string(Distribution d) {
  switch (d) {
    case Distribution::Normal: return "normal";
    case Distribution::Exponential: return "exponential";
    case Distribution::Gumbel: return "gumbel";
  }
  return "normal";
}

Distribution distribution_from_string(std::string_view name) {
  if (name == "normal") return Distribution::Normal;
  if (name == "exponential") return Distribution::Exponential;
  if (name == "gumbel") return Distribution::Gumbel;
  throw Error(ErrorCode::ConfigError, "unknown distribution '" + std::string(name) + "'");
}

void validate(const DatasetSpec& s) {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::SpecError, msg); };
  if (s.dims < 2 || s.dims > 100) fail("dims must be in [2,100]");
  if (s.clusters < 2 || s.clusters > 35) fail("clusters must be in [2,35]");
  if (s.samples < 150 || s.samples > 5000) fail("samples must be in [150,5000]");
  if (s.clusters > s.samples / 2) fail("clusters must not exceed samples/2");
  if (!(s.overlap >= 1e-6 && s.overlap <= 1e-5)) fail("overlap must be in [1e-6,1e-5]");
  if (!(s.aspect_ref >= 1.0 && s.aspect_ref <= 10.0)) fail("aspect_ref must be in [1,10]");
  if (!(s.aspect_max_min >= 1.0 && s.aspect_max_min <= 10.0)) fail("aspect_max_min must be in [1,10]");
  if (!(s.radius_max_min >= 1.0 && s.radius_max_min <= 10.0)) fail("radius_max_min must be in [1,10]");
  if (!(s.imbalance_ratio >= 1.0 && s.imbalance_ratio <= 3.0)) fail("imbalance_ratio must be in [1,3]");
}

DatasetSpecRanges DatasetSpecRanges::training() { return DatasetSpecRanges{}; }

DatasetSpecRanges DatasetSpecRanges::validation() {
  DatasetSpecRanges r;
  r.aspect_ref = {1.0, 10.0};
  r.aspect_max_min = {1.0, 10.0};
  r.radius_max_min = {1.0, 10.0};
  return r;
}

namespace {

template <typename T>
void read_range(const nlohmann::json& j, const char* key, Range<T>& r) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  if (!v.is_array() || v.size() != 2) {
    throw Error(ErrorCode::ConfigError, std::string("range '") + key + "' must be [lo, hi]");
  }
  r.lo = v[0].get<T>();
  r.hi = v[1].get<T>();
}

template <typename T>
void check(const Range<T>& r, const char* name) {
  if (!(r.lo <= r.hi)) throw Error(ErrorCode::ConfigError, std::string("empty range for ") + name);
}

}  // namespace

DatasetSpecRanges DatasetSpecRanges::from_name_or_file(const std::string& name_or_path) {
  if (name_or_path == "training" || name_or_path == "table1") return training();
  if (name_or_path == "validation" || name_or_path == "table6") return validation();
  std::ifstream in(name_or_path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open ranges file '" + name_or_path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, "ranges file: " + std::string(e.what()));
  }
  auto r = j.value("base", std::string("training")) == "validation" ? validation() : training();
  try {
    read_range(j, "dims", r.dims);
    read_range(j, "clusters", r.clusters);
    read_range(j, "samples", r.samples);
    read_range(j, "overlap", r.overlap);
    read_range(j, "aspect_ref", r.aspect_ref);
    read_range(j, "aspect_max_min", r.aspect_max_min);
    read_range(j, "radius_max_min", r.radius_max_min);
    read_range(j, "imbalance_ratio", r.imbalance_ratio);
    if (j.contains("distributions")) {
      r.distributions.clear();
      for (const auto& d : j.at("distributions")) {
        r.distributions.push_back(distribution_from_string(d.get<std::string>()));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, "ranges file: " + std::string(e.what()));
  }
  validate(r);
  return r;
}

void validate(const DatasetSpecRanges& r) {
  check(r.dims, "dims");
  check(r.clusters, "clusters");
  check(r.samples, "samples");
  check(r.overlap, "overlap");
  check(r.aspect_ref, "aspect_ref");
  check(r.aspect_max_min, "aspect_max_min");
  check(r.radius_max_min, "radius_max_min");
  check(r.imbalance_ratio, "imbalance_ratio");
  if (r.distributions.empty()) throw Error(ErrorCode::ConfigError, "no distributions configured");
  if (!(r.overlap.lo > 0.0)) throw Error(ErrorCode::ConfigError, "overlap must be positive");
}

DatasetSpec sample_spec(const DatasetSpecRanges& r, RngStream& rng) {
  validate(r);
  DatasetSpec s;
  s.dims = static_cast<int>(rng.uniform_int(r.dims.lo, r.dims.hi));
  s.samples = static_cast<int>(rng.uniform_int(r.samples.lo, r.samples.hi));
  s.clusters = std::min(static_cast<int>(rng.uniform_int(r.clusters.lo, r.clusters.hi)), s.samples / 2);
  s.overlap = std::exp(rng.uniform(std::log(r.overlap.lo), std::log(r.overlap.hi)));
  s.aspect_ref = rng.uniform(r.aspect_ref.lo, r.aspect_ref.hi);
  s.aspect_max_min = rng.uniform(r.aspect_max_min.lo, r.aspect_max_min.hi);
  s.radius_max_min = rng.uniform(r.radius_max_min.lo, r.radius_max_min.hi);
  s.distribution = r.distributions[rng.uniform_index(r.distributions.size())];
  s.imbalance_ratio = rng.uniform(r.imbalance_ratio.lo, r.imbalance_ratio.hi);
  s.seed = rng.next_u64();
  return s;
}

std::vector<int> cluster_sizes(int samples, int clusters, double imbalance_ratio) {
  if (clusters < 1 || clusters > std::max(1, samples / 2)) {
    throw Error(ErrorCode::SpecError, "infeasible size allocation: " + std::to_string(clusters) +
                                          " clusters for " + std::to_string(samples) + " samples");
  }
  std::vector<double> weights(static_cast<std::size_t>(clusters));
  for (int c = 0; c < clusters; ++c) {
    const double t = clusters == 1 ? 0.0 : static_cast<double>(c) / (clusters - 1);
    weights[static_cast<std::size_t>(c)] = std::pow(imbalance_ratio, t);
  }
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<int> sizes(weights.size());
  std::vector<std::pair<double, int>> remainders;
  int assigned = 0;
  for (std::size_t c = 0; c < weights.size(); ++c) {
    const double raw = samples * weights[c] / total;
    sizes[c] = static_cast<int>(std::floor(raw));
    assigned += sizes[c];
    remainders.emplace_back(raw - sizes[c], static_cast<int>(c));
  }
  // Largest remainder first; lowest index on ties.
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (int i = 0; i < samples - assigned; ++i) {
    ++sizes[static_cast<std::size_t>(remainders[static_cast<std::size_t>(i)].second)];
  }
  for (auto& s : sizes) {
    while (s < 1) {
      auto largest = std::max_element(sizes.begin(), sizes.end());
      --*largest;
      ++s;
    }
  }
  return sizes;
}

double target_gap(double overlap) {
  return std::numbers::sqrt2 * special::normal_quantile(1.0 - overlap);
}

namespace {

double standardized_draw(Distribution d, RngStream& rng) {
  constexpr double euler_gamma = 0.57721566490153286;
  switch (d) {
    case Distribution::Normal: return rng.normal();
    case Distribution::Exponential: return rng.exponential() - 1.0;
    case Distribution::Gumbel:
      return (rng.gumbel() - euler_gamma) / (std::numbers::pi / std::sqrt(6.0));
  }
  return 0.0;
}

Matrix random_rotation(int p, RngStream& rng) {
  Matrix g(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < p; ++j) {
    if (r(j, j) < 0) q.col(j) *= -1.0;
  }
  return q;
}

double min_standardized_gap(const Matrix& centers, const std::vector<double>& radii) {
  double g = std::numeric_limits<double>::infinity();
  for (Eigen::Index a = 0; a < centers.rows(); ++a) {
    for (Eigen::Index b = a + 1; b < centers.rows(); ++b) {
      const double d = (centers.row(a) - centers.row(b)).norm();
      g = std::min(g, d / (radii[static_cast<std::size_t>(a)] + radii[static_cast<std::size_t>(b)]));
    }
  }
  return g;
}

}  // namespace

Dataset generate(const DatasetSpec& spec, const std::string& id) {
  validate(spec);
  const int p = spec.dims;
  const int k = spec.clusters;
  const RngStream root(spec.seed, 0x5EED);
  const auto sizes = cluster_sizes(spec.samples, k, spec.imbalance_ratio);

  RngStream shape_rng = root.derive(1);
  std::vector<double> radii(static_cast<std::size_t>(k));
  std::vector<double> aspects(static_cast<std::size_t>(k));
  const double log_r = std::log(spec.radius_max_min);
  const double half_log_a = 0.5 * std::log(spec.aspect_max_min);
  for (int c = 0; c < k; ++c) {
    radii[static_cast<std::size_t>(c)] = std::exp(shape_rng.uniform(0.0, log_r));
    aspects[static_cast<std::size_t>(c)] =
        std::max(1.0, spec.aspect_ref * std::exp(shape_rng.uniform(-half_log_a, half_log_a)));
  }

  RngStream center_rng = root.derive(2);
  Matrix centers(k, p);
  double gap = 0.0;
  do {
    for (int c = 0; c < k; ++c)
      for (int j = 0; j < p; ++j) centers(c, j) = center_rng.uniform();
    gap = min_standardized_gap(centers, radii);
  } while (!(gap > 0.0));
  centers *= target_gap(spec.overlap) / gap;

  Matrix features(spec.samples, p);
  std::vector<int> labels(static_cast<std::size_t>(spec.samples));
  Eigen::Index row = 0;
  Eigen::VectorXd z(p);
  for (int c = 0; c < k; ++c) {
    RngStream rng = root.derive(100 + static_cast<std::uint64_t>(c));
    const Matrix rotation = random_rotation(p, rng);
    Eigen::VectorXd scale(p);
    const double a = aspects[static_cast<std::size_t>(c)];
    for (int j = 0; j < p; ++j) {
      const double t = static_cast<double>(j) / (p - 1) - 0.5;
      scale(j) = radii[static_cast<std::size_t>(c)] * std::pow(a, t);
    }
    const Matrix transform = rotation * scale.asDiagonal();
    for (int i = 0; i < sizes[static_cast<std::size_t>(c)]; ++i, ++row) {
      for (int j = 0; j < p; ++j) z(j) = standardized_draw(spec.distribution, rng);
      features.row(row) = centers.row(c) + (transform * z).transpose();
      labels[static_cast<std::size_t>(row)] = c;
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(spec.samples));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  RngStream perm_rng = root.derive(3);
  perm_rng.shuffle(std::span<Eigen::Index>(order));
  Matrix shuffled(spec.samples, p);
  std::vector<int> shuffled_labels(labels.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    shuffled.row(static_cast<Eigen::Index>(i)) = features.row(order[i]);
    shuffled_labels[i] = labels[static_cast<std::size_t>(order[i])];
  }
  return make_dataset(id, std::move(shuffled), std::move(shuffled_labels));
}

std::vector<ManifestEntry> sample_corpus_specs(int count, const DatasetSpecRanges& ranges,
                                               std::uint64_t seed) {
  if (count < 1) throw Error(ErrorCode::ConfigError, "count must be >= 1");
  validate(ranges);
  const RngStream root(seed, 0xC0495);
  std::vector<ManifestEntry> entries;
  entries.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    RngStream rng = root.derive(static_cast<std::uint64_t>(i));
    char id[32];
    std::snprintf(id, sizeof(id), "ds_%05d", i);
    entries.push_back({id, sample_spec(ranges, rng)});
  }
  return entries;
}

std::vector<ManifestEntry> generate_corpus(int count, const DatasetSpecRanges& ranges,
                                           std::uint64_t seed, const std::filesystem::path& out) {
  auto entries = sample_corpus_specs(count, ranges, seed);
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + out.string() + ": " + ec.message());
  std::string failure;
#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i < count; ++i) {
    const auto& e = entries[static_cast<std::size_t>(i)];
    try {
      save_csv(generate(e.spec, e.id), out / (e.id + ".csv"));
    } catch (const std::exception& ex) {
#pragma omp critical(poac_corpus_failure)
      if (failure.empty()) failure = ex.what();
    }
  }
  if (!failure.empty()) throw Error(ErrorCode::IoError, failure);
  write_manifest(entries, out / "manifest.csv");
  return entries;
}

void write_manifest(const std::vector<ManifestEntry>& entries, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "id,dims,clusters,samples,overlap,aspect_ref,aspect_max_min,radius_max_min,distribution,"
         "imbalance_ratio,seed\n";
  for (const auto& e : entries) {
    const auto& s = e.spec;
    out << e.id << ',' << s.dims << ',' << s.clusters << ',' << s.samples << ','
        << format_double(s.overlap) << ',' << format_double(s.aspect_ref) << ','
        << format_double(s.aspect_max_min) << ',' << format_double(s.radius_max_min) << ','
        << to_string(s.distribution) << ',' << format_double(s.imbalance_ratio) << ',' << s.seed
        << '\n';
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  f << out.str();
  if (!f) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (split_csv_line(line).size() != 11) throw Error(ErrorCode::ParseError, "bad manifest header");
  std::vector<ManifestEntry> entries;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split_csv_line(line);
    if (c.size() != 11) throw Error(ErrorCode::ParseError, "bad manifest row: " + line);
    ManifestEntry e;
    e.id = std::string(c[0]);
    e.spec.dims = static_cast<int>(parse_double(c[1]));
    e.spec.clusters = static_cast<int>(parse_double(c[2]));
    e.spec.samples = static_cast<int>(parse_double(c[3]));
    e.spec.overlap = parse_double(c[4]);
    e.spec.aspect_ref = parse_double(c[5]);
    e.spec.aspect_max_min = parse_double(c[6]);
    e.spec.radius_max_min = parse_double(c[7]);
    e.spec.distribution = distribution_from_string(c[8]);
    e.spec.imbalance_ratio = parse_double(c[9]);
    e.spec.seed = std::stoull(std::string(c[10]));
    entries.push_back(std::move(e));
  }
  return entries;
}

std::vector<std::filesystem::path> list_corpus(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw Error(ErrorCode::IoError, dir.string() + " is not a directory");
  std::vector<std::filesystem::path> files;
  if (std::filesystem::exists(dir / "manifest.csv")) {
    for (const auto& e : read_manifest(dir / "manifest.csv")) files.push_back(dir / (e.id + ".csv"));
    return files;
  }
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace poac::datagen
