#include "poac/evalstats.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "poac/cvi.hpp"
#include "poac/kernels.hpp"
#include "poac/special.hpp"

namespace poac::evalstats {

ResultTable run_ablation(const std::vector<Dataset>& datasets, const std::vector<AblationRun>& runs, int reps,
                         const optimizer::EvolutionConfig& cfg, const estimators::OperatorSpace& space,
                         const AblationObserver& observe) {
  if (reps < 1) throw Error(ErrorCode::ConfigError, "reps must be >= 1");
  if (runs.empty()) throw Error(ErrorCode::ConfigError, "no fitness modes given");
  optimizer::validate(cfg);
  for (const auto& r : runs) optimizer::validate(r.fitness);
  for (const auto& d : datasets) {
    if (!d.labels) throw Error(ErrorCode::MissingLabels, "dataset " + d.id + " has no labels");
  }
  const std::size_t per_dataset = runs.size() * static_cast<std::size_t>(reps);
  const std::size_t total = datasets.size() * per_dataset;
  std::vector<ResultRow> rows(total);
  const RngStream root(cfg.seed, 0xAB1A7E);

#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t t = 0; t < total; ++t) {
    const std::size_t di = t / per_dataset;
    const std::size_t mi = (t % per_dataset) / static_cast<std::size_t>(reps);
    const auto rep = static_cast<int>(t % static_cast<std::size_t>(reps));
    const Dataset& d = datasets[di];
    ResultRow row{d.id, runs[mi].method, rep, std::nan(""), std::nan(""), std::nan(""), 0, 0.0};
    optimizer::EvolutionConfig run_cfg = cfg;
    // The seed depends on dataset and rep only, so modes share generation 0.
    run_cfg.seed = root.derive(di).derive(static_cast<std::uint64_t>(rep)).next_u64();
    const auto start = std::chrono::steady_clock::now();
    try {
      const auto result = optimizer::evolve(strip_labels(d), runs[mi].fitness, run_cfg, space);
      row.complexity = static_cast<int>(result.best.complexity());
      row.sil = result.best_evaluation.sil;
      row.dbs = result.best_evaluation.dbs;
      if (!result.best_partition.assignments.empty()) {
        row.ari = cvi::adjusted_rand_index(*d.labels, result.best_partition);
      }
      if (observe) observe(t, result);
    } catch (const Error&) {
      // left as a NaN row
    }
    row.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    rows[t] = std::move(row);
  }
  return ResultTable{std::move(rows)};
}

std::vector<double> average_ranks(const Matrix& scores) {
  const auto n = scores.rows();
  const auto k = scores.cols();
  if (n < 2) throw Error(ErrorCode::ConfigError, "Friedman test needs at least 2 datasets");
  if (k < 2) throw Error(ErrorCode::ConfigError, "Friedman test needs at least 2 methods");
  if (scores.hasNaN()) throw Error(ErrorCode::MissingData, "score matrix contains NaN");
  std::vector<double> sums(static_cast<std::size_t>(k), 0.0);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) order[static_cast<std::size_t>(j)] = j;
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return scores(i, a) > scores(i, b); });
    for (std::size_t s = 0; s < order.size();) {
      std::size_t e = s + 1;
      while (e < order.size() && scores(i, order[e]) == scores(i, order[s])) ++e;
      const double rank = (static_cast<double>(s + 1) + static_cast<double>(e)) / 2.0;
      for (std::size_t t = s; t < e; ++t) sums[static_cast<std::size_t>(order[t])] += rank;
      s = e;
    }
  }
  for (auto& v : sums) v /= static_cast<double>(n);
  return sums;
}

FriedmanResult friedman(const Matrix& scores) {
  FriedmanResult r;
  r.mean_ranks = average_ranks(scores);
  const auto n = static_cast<double>(scores.rows());
  const auto k = static_cast<double>(scores.cols());
  double sq = 0.0;
  for (const double m : r.mean_ranks) sq += m * m;
  r.statistic = 12.0 * n / (k * (k + 1.0)) * (sq - k * (k + 1.0) * (k + 1.0) / 4.0);
  if (std::abs(r.statistic) < 1e-12) r.statistic = 0.0;
  r.p_value = special::chi_square_sf(r.statistic, k - 1.0);
  return r;
}

double nemenyi_q(int k, double alpha) {
  static constexpr double q05[] = {1.960, 2.343, 2.569, 2.728, 2.850, 2.949, 3.031, 3.102, 3.164};
  static constexpr double q10[] = {1.645, 2.052, 2.291, 2.459, 2.589, 2.693, 2.780, 2.855, 2.920};
  if (k < 2 || k > 10) throw Error(ErrorCode::ConfigError, "Nemenyi table covers k = 2..10, got " + std::to_string(k));
  const auto i = static_cast<std::size_t>(k - 2);
  if (alpha == 0.05) return q05[i];
  if (alpha == 0.10) return q10[i];
  throw Error(ErrorCode::ConfigError, "Nemenyi table covers alpha 0.05 and 0.10 only");
}

double nemenyi_cd(int k, int n, double alpha) {
  if (n < 2) throw Error(ErrorCode::ConfigError, "Nemenyi CD needs N >= 2");
  const double q = nemenyi_q(k, alpha);
  return q * std::sqrt(static_cast<double>(k) * (k + 1) / (6.0 * n));
}

std::vector<std::vector<bool>> nemenyi_significance(const std::vector<double>& mean_ranks, double cd) {
  const std::size_t k = mean_ranks.size();
  std::vector<std::vector<bool>> sig(k, std::vector<bool>(k, false));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) sig[i][j] = std::abs(mean_ranks[i] - mean_ranks[j]) > cd;
  }
  return sig;
}

namespace {

double sorted_mean(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  return kernels::ordered_sum(v) / static_cast<double>(v.size());
}

}  // namespace

std::vector<MethodSummary> summarize(const ResultTable& table) {
  if (table.rows.empty()) throw Error(ErrorCode::EmptyTable, "result table is empty");
  struct Acc {
    std::vector<double> ari, sil, dbs, complexity;
    std::size_t rows = 0, excluded = 0;
  };
  std::map<std::string, Acc> acc;
  for (const auto& r : table.rows) {
    auto& a = acc[r.method];
    ++a.rows;
    if (!std::isfinite(r.ari) || !std::isfinite(r.sil) || !std::isfinite(r.dbs)) {
      ++a.excluded;
      continue;
    }
    a.ari.push_back(r.ari);
    a.sil.push_back(r.sil);
    a.dbs.push_back(r.dbs);
    a.complexity.push_back(static_cast<double>(r.complexity));
  }
  std::vector<MethodSummary> out;
  for (auto& [method, a] : acc) {
    out.push_back({method, sorted_mean(std::move(a.ari)), sorted_mean(std::move(a.sil)), sorted_mean(std::move(a.dbs)),
                   sorted_mean(std::move(a.complexity)), a.rows, a.excluded});
  }
  return out;
}

PairedScores paired_ari(const ResultTable& table) {
  std::set<std::string> method_set;
  std::map<std::string, std::map<std::string, std::vector<double>>> cells;
  for (const auto& r : table.rows) {
    method_set.insert(r.method);
    auto& v = cells[r.dataset_id][r.method];
    if (std::isfinite(r.ari)) v.push_back(r.ari);
  }
  PairedScores out;
  out.methods.assign(method_set.begin(), method_set.end());
  std::vector<std::vector<double>> kept;
  for (const auto& [id, by_method] : cells) {
    std::vector<double> row;
    for (const auto& m : out.methods) {
      const auto it = by_method.find(m);
      if (it == by_method.end() || it->second.empty()) break;
      row.push_back(sorted_mean(it->second));
    }
    if (row.size() != out.methods.size()) continue;
    out.datasets.push_back(id);
    kept.push_back(std::move(row));
  }
  out.scores.resize(static_cast<Eigen::Index>(kept.size()), static_cast<Eigen::Index>(out.methods.size()));
  for (std::size_t i = 0; i < kept.size(); ++i) {
    for (std::size_t j = 0; j < kept[i].size(); ++j) {
      out.scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = kept[i][j];
    }
  }
  return out;
}

std::string stats_report(const ResultTable& table, double alpha) {
  const auto summary = summarize(table);
  const auto paired = paired_ari(table);
  const int k = static_cast<int>(paired.methods.size());
  const int n = static_cast<int>(paired.datasets.size());
  const double cd = nemenyi_cd(k, n, alpha);
  const auto fr = friedman(paired.scores);
  const auto sig = nemenyi_significance(fr.mean_ranks, cd);

  std::ostringstream out;
  char buf[256];
  out << "methods: " << k << "\ndatasets: " << n << "\n\n";
  out << "method               mean_ari   mean_sil   mean_dbs   complexity  rows  excluded\n";
  for (const auto& s : summary) {
    std::snprintf(buf, sizeof buf, "%-20s %9.4f  %9.4f  %9.4f  %10.3f  %4zu  %8zu\n", s.method.c_str(), s.mean_ari,
                  s.mean_sil, s.mean_dbs, s.mean_complexity, s.rows, s.excluded);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "\nfriedman_statistic: %.6f\np_value: %.6g\nalpha: %.2f\ncritical_distance: %.3f\n",
                fr.statistic, fr.p_value, alpha, cd);
  out << buf << "\nmean_ranks:\n";
  for (int j = 0; j < k; ++j) {
    std::snprintf(buf, sizeof buf, "  %-20s %.4f\n", paired.methods[static_cast<std::size_t>(j)].c_str(),
                  fr.mean_ranks[static_cast<std::size_t>(j)]);
    out << buf;
  }
  out << "\nsignificant_differences (|rank diff| > CD):\n";
  std::snprintf(buf, sizeof buf, "  %-20s", "");
  out << buf;
  for (const auto& m : paired.methods) out << ' ' << m;
  out << '\n';
  for (int i = 0; i < k; ++i) {
    std::snprintf(buf, sizeof buf, "  %-20s", paired.methods[static_cast<std::size_t>(i)].c_str());
    out << buf;
    for (int j = 0; j < k; ++j) {
      const auto& name = paired.methods[static_cast<std::size_t>(j)];
      const char* mark = i == j ? "-" : (sig[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] ? "*" : ".");
      out << ' ' << std::string(name.size() > 1 ? name.size() - 1 : 0, ' ') << mark;
    }
    out << '\n';
  }
  return out.str();
}

void write_results_csv(const ResultTable& table, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "dataset_id,method,rep,ari,sil,dbs,complexity,runtime_s\n";
  for (const auto& r : table.rows) {
    out << r.dataset_id << ',' << r.method << ',' << r.rep << ',' << format_double(r.ari) << ','
        << format_double(r.sil) << ',' << format_double(r.dbs) << ',' << r.complexity << ','
        << format_double(r.runtime_s) << '\n';
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  f << out.str();
}

ResultTable read_results_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "dataset_id,method,rep,ari,sil,dbs,complexity,runtime_s") {
    throw Error(ErrorCode::FormatError, path.string() + ": unexpected results header");
  }
  ResultTable table;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto c = split_csv_line(line);
    if (c.size() != 8) {
      throw Error(ErrorCode::FormatError, path.string() + ": line " + std::to_string(line_no) + " needs 8 cells");
    }
    try {
      table.rows.push_back({std::string(c[0]), std::string(c[1]), static_cast<int>(parse_double(c[2])),
                            parse_double(c[3]), parse_double(c[4]), parse_double(c[5]),
                            static_cast<int>(parse_double(c[6])), parse_double(c[7])});
    } catch (const Error& e) {
      throw Error(ErrorCode::FormatError, path.string() + ": line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return table;
}

}  // namespace poac::evalstats
