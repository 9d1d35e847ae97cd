#include "poac/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "poac/kernels.hpp"
#include "poac/rng.hpp"

namespace poac::surrogate {

namespace {

// Mean anchored at the first value, so a constant input returns that value
// exactly; clamped to the observed range.
double anchored_mean(std::span<const double> v) {
  const double first = v[0];
  double lo = first, hi = first, acc = 0.0;
  for (const double x : v) {
    acc += x - first;
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  return std::clamp(first + acc / static_cast<double>(v.size()), lo, hi);
}

struct SplitCandidate {
  int feature = -1;
  double threshold = 0.0;
  double gain = -1.0;
};

struct Builder {
  const std::vector<std::vector<double>>& columns;
  const std::vector<double>& y;
  int mtry;
  std::vector<int> idx;
  std::vector<std::pair<double, double>> buf;
  std::vector<double> gains;
  Tree tree;

  double leaf_value(int lo, int hi) {
    std::vector<double> v;
    v.reserve(static_cast<std::size_t>(hi - lo));
    for (int i = lo; i < hi; ++i) v.push_back(y[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])]);
    return anchored_mean(v);
  }

  bool pure(int lo, int hi) const {
    const double y0 = y[static_cast<std::size_t>(idx[static_cast<std::size_t>(lo)])];
    for (int i = lo + 1; i < hi; ++i) {
      if (y[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])] != y0) return false;
    }
    return true;
  }

  // Best threshold of one feature over idx[lo, hi); returns false if constant.
  bool best_split(int f, int lo, int hi, SplitCandidate& best) {
    const auto& col = columns[static_cast<std::size_t>(f)];
    buf.clear();
    for (int i = lo; i < hi; ++i) {
      const auto s = static_cast<std::size_t>(idx[static_cast<std::size_t>(i)]);
      buf.emplace_back(col[s], y[s]);
    }
    std::sort(buf.begin(), buf.end());
    if (buf.front().first == buf.back().first) return false;
    double total = 0.0;
    for (const auto& [xv, yv] : buf) total += yv;
    const double m = static_cast<double>(buf.size());
    const double parent = total * total / m;
    double left = 0.0;
    for (std::size_t i = 0; i + 1 < buf.size(); ++i) {
      left += buf[i].second;
      if (buf[i].first == buf[i + 1].first) continue;
      const double nl = static_cast<double>(i + 1);
      const double right = total - left;
      const double gain = left * left / nl + right * right / (m - nl) - parent;
      if (gain > best.gain) {
        const double a = buf[i].first, b = buf[i + 1].first;
        double t = a + (b - a) / 2.0;
        if (!std::isfinite(t) || t >= b || t < a) t = a;
        best = SplitCandidate{f, t, gain};
      }
    }
    return true;
  }

  void grow(RngStream& rng) {
    struct Pending {
      int node, lo, hi;
    };
    const int n_features = static_cast<int>(columns.size());
    std::vector<int> order(static_cast<std::size_t>(n_features));
    std::vector<Pending> stack;
    tree.nodes.push_back({});
    stack.push_back({0, 0, static_cast<int>(idx.size())});
    while (!stack.empty()) {
      const Pending cur = stack.back();
      stack.pop_back();
      auto node_ref = [&]() -> TreeNode& { return tree.nodes[static_cast<std::size_t>(cur.node)]; };
      if (cur.hi - cur.lo < 2 || pure(cur.lo, cur.hi)) {
        node_ref().value = leaf_value(cur.lo, cur.hi);
        continue;
      }
      std::iota(order.begin(), order.end(), 0);
      rng.shuffle(std::span<int>(order));
      SplitCandidate best;
      int usable = 0;
      for (const int f : order) {
        if (best_split(f, cur.lo, cur.hi, best)) ++usable;
        if (usable >= mtry) break;
      }
      if (best.feature < 0) {
        node_ref().value = leaf_value(cur.lo, cur.hi);
        continue;
      }
      const auto& col = columns[static_cast<std::size_t>(best.feature)];
      auto first = idx.begin() + cur.lo;
      auto last = idx.begin() + cur.hi;
      auto mid = std::stable_partition(
          first, last, [&](int s) { return col[static_cast<std::size_t>(s)] <= best.threshold; });
      const int split = static_cast<int>(mid - idx.begin());
      gains[static_cast<std::size_t>(best.feature)] += std::max(0.0, best.gain);
      const int left = static_cast<int>(tree.nodes.size());
      tree.nodes.push_back({});
      tree.nodes.push_back({});
      TreeNode& node = tree.nodes[static_cast<std::size_t>(cur.node)];
      node.feature = best.feature;
      node.threshold = best.threshold;
      node.left = left;
      node.right = left + 1;
      node.value = 0.0;
      stack.push_back({left + 1, split, cur.hi});
      stack.push_back({left, cur.lo, split});
    }
  }
};

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : v[n / 2 - 1] + (v[n / 2] - v[n / 2 - 1]) / 2.0;
}

}  // namespace

std::vector<std::string> feature_names(FeatureLayout layout) {
  std::vector<std::string> names;
  if (layout == FeatureLayout::Full) {
    for (const auto n : metafeatures::kNames) names.emplace_back(n);
  }
  names.emplace_back("sil");
  names.emplace_back("dbs");
  return names;
}

double Tree::predict(std::span<const double> x) const {
  std::size_t i = 0;
  while (nodes[i].feature >= 0) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return nodes[i].value;
}

SurrogateModel::SurrogateModel(std::vector<std::string> feature_names, std::vector<double> imputation,
                               std::vector<Tree> trees, std::vector<double> importances)
    : names_(std::move(feature_names)),
      imputation_(std::move(imputation)),
      trees_(std::move(trees)),
      importances_(std::move(importances)) {
  if (names_.empty() || imputation_.size() != names_.size() || importances_.size() != names_.size()) {
    throw Error(ErrorCode::ShapeError, "model feature names, imputation and importances differ in length");
  }
}

double SurrogateModel::predict(std::span<const double> features) const {
  if (features.size() != names_.size()) {
    throw Error(ErrorCode::ShapeError, "expected " + std::to_string(names_.size()) + " features, got " +
                                           std::to_string(features.size()));
  }
  if (trees_.empty()) throw Error(ErrorCode::InvariantError, "model has no trees");
  std::vector<double> x(features.begin(), features.end());
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (std::isnan(x[j])) x[j] = imputation_[j];
  }
  std::vector<double> outputs;
  outputs.reserve(trees_.size());
  for (const auto& t : trees_) outputs.push_back(t.predict(x));
  return anchored_mean(outputs);
}

std::vector<double> SurrogateModel::predict(const Matrix& x) const {
  if (static_cast<std::size_t>(x.cols()) != names_.size()) {
    throw Error(ErrorCode::ShapeError, "expected " + std::to_string(names_.size()) + " feature columns");
  }
  std::vector<double> out(static_cast<std::size_t>(x.rows()));
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    out[static_cast<std::size_t>(i)] = predict(std::span<const double>(x.row(i).data(), names_.size()));
  }
  return out;
}

std::vector<double> input_vector(const SurrogateModel& model, const metafeatures::MetaFeatureVector& mu,
                                 double sil, double dbs) {
  std::vector<double> v;
  v.reserve(model.n_features());
  for (const auto& name : model.feature_names()) {
    if (name == "sil") {
      v.push_back(sil);
    } else if (name == "dbs") {
      v.push_back(dbs);
    } else {
      v.push_back(mu[name]);
    }
  }
  return v;
}

TrainingData training_data(const std::vector<metabase::MetaBaseRow>& rows, FeatureLayout layout) {
  TrainingData d;
  d.names = feature_names(layout);
  const auto p = static_cast<Eigen::Index>(d.names.size());
  d.x.resize(static_cast<Eigen::Index>(rows.size()), p);
  d.y.reserve(rows.size());
  d.groups.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const auto ii = static_cast<Eigen::Index>(i);
    Eigen::Index j = 0;
    if (layout == FeatureLayout::Full) {
      for (const double v : r.metafeatures.values) d.x(ii, j++) = v;
    }
    d.x(ii, j++) = r.sil;
    d.x(ii, j++) = r.dbs;
    d.y.push_back(r.ari);
    d.groups.push_back(r.dataset_id);
  }
  return d;
}

SurrogateModel fit(const std::vector<std::string>& names, const Matrix& x, const std::vector<double>& y,
                   const ForestParams& params, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(x.rows());
  const auto p = static_cast<std::size_t>(x.cols());
  if (names.size() != p) throw Error(ErrorCode::ShapeError, "feature names do not match matrix columns");
  if (y.size() != n) throw Error(ErrorCode::ShapeError, "target length does not match row count");
  if (n < kMinTrainingRows) {
    throw Error(ErrorCode::InvalidInput, "forest needs at least " + std::to_string(kMinTrainingRows) +
                                             " rows, got " + std::to_string(n));
  }
  if (params.n_trees < 1) throw Error(ErrorCode::ConfigError, "n_trees must be >= 1");
  for (const double v : y) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidInput, "training targets must be finite");
  }

  std::vector<double> imputation(p);
  std::vector<std::vector<double>> columns(p, std::vector<double>(n));
  for (std::size_t j = 0; j < p; ++j) {
    std::vector<double> present;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (!std::isnan(v)) present.push_back(v);
    }
    if (present.empty()) throw Error(ErrorCode::FitError, "feature column '" + names[j] + "' is entirely NaN");
    imputation[j] = median_of(std::move(present));
    for (std::size_t i = 0; i < n; ++i) {
      const double v = x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      columns[j][i] = std::isnan(v) ? imputation[j] : v;
    }
  }

  const int mtry = params.max_features > 0 ? std::min<int>(params.max_features, static_cast<int>(p))
                                           : std::max(1, static_cast<int>(p) / 3);
  const auto n_trees = static_cast<std::size_t>(params.n_trees);
  std::vector<Tree> trees(n_trees);
  std::vector<std::vector<double>> tree_gains(n_trees);
  const RngStream root(seed, 0xF0E57);

#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t t = 0; t < n_trees; ++t) {
    RngStream rng = root.derive(t);
    Builder b{columns, y, mtry, {}, {}, std::vector<double>(p, 0.0), {}};
    b.idx.resize(n);
    if (params.bootstrap) {
      for (auto& s : b.idx) s = static_cast<int>(rng.uniform_index(n));
      std::sort(b.idx.begin(), b.idx.end());
    } else {
      std::iota(b.idx.begin(), b.idx.end(), 0);
    }
    b.grow(rng);
    trees[t] = std::move(b.tree);
    tree_gains[t] = std::move(b.gains);
  }

  std::vector<double> importances(p, 0.0);
  for (const auto& g : tree_gains) {
    const double total = kernels::ordered_sum(g);
    if (total <= 0.0) continue;
    for (std::size_t j = 0; j < p; ++j) importances[j] += g[j] / total;
  }
  const double total = kernels::ordered_sum(importances);
  for (auto& v : importances) v = total > 0.0 ? v / total : 1.0 / static_cast<double>(p);
  return SurrogateModel(names, std::move(imputation), std::move(trees), std::move(importances));
}

SurrogateModel fit(const std::vector<metabase::MetaBaseRow>& rows, const ForestParams& params,
                   std::uint64_t seed) {
  const auto d = training_data(rows, params.layout);
  return fit(d.names, d.x, d.y, params, seed);
}

double r2_score(std::span<const double> truth, std::span<const double> predicted) {
  if (truth.size() != predicted.size() || truth.empty()) {
    throw Error(ErrorCode::ShapeError, "r2 needs equal-length non-empty inputs");
  }
  const double mean = kernels::ordered_sum(truth) / static_cast<double>(truth.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ss_res += (truth[i] - predicted[i]) * (truth[i] - predicted[i]);
    ss_tot += (truth[i] - mean) * (truth[i] - mean);
  }
  if (ss_tot == 0.0) return ss_res == 0.0 ? 1.0 : 0.0;
  return 1.0 - ss_res / ss_tot;
}

CvReport cross_validate(const TrainingData& data, const ForestParams& params, int folds, std::uint64_t seed,
                        bool grouped) {
  if (folds < 2) throw Error(ErrorCode::ConfigError, "folds must be >= 2");
  const std::size_t n = data.y.size();
  RngStream rng(seed, 0xC5F01D);
  std::vector<int> fold_of(n);
  if (grouped) {
    std::vector<std::string> ids(data.groups);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    if (ids.size() < static_cast<std::size_t>(folds)) {
      throw Error(ErrorCode::ConfigError, "grouped CV with " + std::to_string(folds) + " folds needs at least " +
                                              std::to_string(folds) + " datasets, got " +
                                              std::to_string(ids.size()));
    }
    rng.shuffle(std::span<std::string>(ids));
    std::map<std::string, int> group_fold;
    for (std::size_t i = 0; i < ids.size(); ++i) group_fold[ids[i]] = static_cast<int>(i % folds);
    for (std::size_t i = 0; i < n; ++i) fold_of[i] = group_fold.at(data.groups[i]);
  } else {
    if (n < static_cast<std::size_t>(folds)) throw Error(ErrorCode::ConfigError, "fewer rows than folds");
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(perm));
    for (std::size_t i = 0; i < n; ++i) fold_of[perm[i]] = static_cast<int>(i % folds);
  }

  CvReport report;
  for (int f = 0; f < folds; ++f) {
    std::vector<Eigen::Index> train, test;
    for (std::size_t i = 0; i < n; ++i) (fold_of[i] == f ? test : train).push_back(static_cast<Eigen::Index>(i));
    Matrix xtr(static_cast<Eigen::Index>(train.size()), data.x.cols());
    Matrix xte(static_cast<Eigen::Index>(test.size()), data.x.cols());
    std::vector<double> ytr, yte;
    for (std::size_t i = 0; i < train.size(); ++i) {
      xtr.row(static_cast<Eigen::Index>(i)) = data.x.row(train[i]);
      ytr.push_back(data.y[static_cast<std::size_t>(train[i])]);
    }
    for (std::size_t i = 0; i < test.size(); ++i) {
      xte.row(static_cast<Eigen::Index>(i)) = data.x.row(test[i]);
      yte.push_back(data.y[static_cast<std::size_t>(test[i])]);
    }
    const auto model = fit(data.names, xtr, ytr, params, rng.derive(static_cast<std::uint64_t>(f)).next_u64());
    const auto pred = model.predict(xte);
    double sse = 0.0;
    for (std::size_t i = 0; i < yte.size(); ++i) sse += (yte[i] - pred[i]) * (yte[i] - pred[i]);
    report.fold_scores.push_back({r2_score(yte, pred), sse / static_cast<double>(yte.size()), yte.size()});
  }
  for (const auto& s : report.fold_scores) {
    report.r2 += s.r2;
    report.mse += s.mse;
  }
  report.r2 /= folds;
  report.mse /= folds;
  return report;
}

CvReport cross_validate(const std::vector<metabase::MetaBaseRow>& rows, const ForestParams& params,
                        int folds, std::uint64_t seed, bool grouped) {
  return cross_validate(training_data(rows, params.layout), params, folds, seed, grouped);
}

std::vector<std::pair<std::string, double>> feature_importance(const SurrogateModel& model) {
  std::vector<std::pair<std::string, double>> out;
  for (std::size_t j = 0; j < model.n_features(); ++j) {
    out.emplace_back(model.feature_names()[j], model.importances()[j]);
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  return out;
}

void save(const SurrogateModel& model, const std::filesystem::path& path) {
  if (model.trees().empty()) throw Error(ErrorCode::InvariantError, "refusing to save a model with 0 trees");
  std::ostringstream out;
  out << "{\"schema_version\":" << kSchemaVersion
      << ",\"feature_names\":" << nlohmann::json(model.feature_names()).dump()
      << ",\"imputation\":" << nlohmann::json(model.imputation()).dump()
      << ",\"importances\":" << nlohmann::json(model.importances()).dump()
      << ",\"n_trees\":" << model.trees().size() << ",\"trees\":[";
  for (std::size_t t = 0; t < model.trees().size(); ++t) {
    if (t > 0) out << ',';
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : model.trees()[t].nodes) {
      nodes.push_back({{"feature", n.feature},
                       {"threshold", n.threshold},
                       {"left", n.left},
                       {"right", n.right},
                       {"value", n.value}});
    }
    out << nlohmann::json{{"nodes", std::move(nodes)}}.dump();
  }
  out << "]}\n";
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  f << out.str();
  if (!f) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

SurrogateModel load(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  auto bad = [&](const std::string& what) { return Error(ErrorCode::FormatError, path.string() + ": " + what); };
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw bad(std::string("not valid JSON (") + e.what() + ")");
  }
  try {
    if (!j.is_object() || !j.contains("schema_version")) throw bad("missing schema_version");
    if (j.at("schema_version").get<int>() != kSchemaVersion) {
      throw bad("unsupported schema_version " + j.at("schema_version").dump());
    }
    auto names = j.at("feature_names").get<std::vector<std::string>>();
    auto imputation = j.at("imputation").get<std::vector<double>>();
    auto importances = j.at("importances").get<std::vector<double>>();
    const auto& jt = j.at("trees");
    if (!jt.is_array() || jt.size() != j.at("n_trees").get<std::size_t>()) throw bad("n_trees mismatch");
    if (jt.empty()) throw bad("model has no trees");
    std::vector<Tree> trees;
    trees.reserve(jt.size());
    const auto p = static_cast<int>(names.size());
    for (const auto& t : jt) {
      Tree tree;
      const auto& nodes = t.at("nodes");
      const auto count = static_cast<int>(nodes.size());
      if (count == 0) throw bad("empty tree");
      tree.nodes.reserve(nodes.size());
      for (const auto& n : nodes) {
        TreeNode node{n.at("feature").get<int>(), n.at("threshold").get<double>(), n.at("left").get<int>(),
                      n.at("right").get<int>(), n.at("value").get<double>()};
        if (node.feature >= p || node.feature < -1) throw bad("node feature out of range");
        if (node.feature >= 0) {
          const int self = static_cast<int>(tree.nodes.size());
          if (node.left <= self || node.right <= self || node.left >= count || node.right >= count) {
            throw bad("node child index out of range");
          }
        }
        tree.nodes.push_back(node);
      }
      trees.push_back(std::move(tree));
    }
    return SurrogateModel(std::move(names), std::move(imputation), std::move(trees), std::move(importances));
  } catch (const nlohmann::json::exception& e) {
    throw bad(std::string("malformed model (") + e.what() + ")");
  } catch (const Error& e) {
    if (e.code() == ErrorCode::FormatError) throw;
    throw bad(e.what());
  }
}

void write_cv_csv(const CvReport& report, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "fold,r2,mse,test_rows\n";
  for (std::size_t f = 0; f < report.fold_scores.size(); ++f) {
    const auto& s = report.fold_scores[f];
    out << f << ',' << format_double(s.r2) << ',' << format_double(s.mse) << ',' << s.test_rows << '\n';
  }
  std::size_t rows = 0;
  for (const auto& s : report.fold_scores) rows += s.test_rows;
  out << "mean," << format_double(report.r2) << ',' << format_double(report.mse) << ',' << rows << '\n';
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  f << out.str();
}

}  // namespace poac::surrogate
