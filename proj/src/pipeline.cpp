#include "poac/estimators.hpp"

#include <algorithm>

namespace poac::estimators {
namespace {

constexpr std::pair<OperatorKind, std::string_view> kKindNames[] = {
    {OperatorKind::MinMaxScaler, "MinMaxScaler"},
    {OperatorKind::Normalizer, "Normalizer"},
    {OperatorKind::StandardScaler, "StandardScaler"},
    {OperatorKind::VarianceThreshold, "VarianceThreshold"},
    {OperatorKind::PCA, "PCA"},
    {OperatorKind::FastICA, "FastICA"},
    {OperatorKind::KMeans, "KMeans"},
    {OperatorKind::MiniBatchKMeans, "MiniBatchKMeans"},
    {OperatorKind::DBSCAN, "DBSCAN"},
    {OperatorKind::Agglomerative, "Agglomerative"},
    {OperatorKind::Spectral, "Spectral"},
};

std::vector<HyperValue> int_range(std::int64_t lo, std::int64_t hi) {
  std::vector<HyperValue> v;
  for (auto i = lo; i <= hi; ++i) v.emplace_back(i);
  return v;
}

std::vector<HyperValue> ints(std::initializer_list<std::int64_t> xs) {
  return {xs.begin(), xs.end()};
}

std::vector<HyperValue> reals(std::initializer_list<double> xs) { return {xs.begin(), xs.end()}; }

std::vector<HyperValue> names(std::initializer_list<const char*> xs) {
  std::vector<HyperValue> v;
  for (const char* x : xs) v.emplace_back(std::string(x));
  return v;
}

nlohmann::json value_to_json(const HyperValue& v) {
  return std::visit([](const auto& x) { return nlohmann::json(x); }, v);
}

HyperValue value_from_json(const nlohmann::json& j) {
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number_float()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  throw Error(ErrorCode::FormatError, "unsupported hyperparameter value " + j.dump());
}

}  // namespace

std::string_view to_string(OperatorKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "?";
}

OperatorKind kind_from_string(std::string_view name) {
  for (const auto& [k, n] : kKindNames) {
    if (n == name) return k;
  }
  throw Error(ErrorCode::FormatError, "unknown operator '" + std::string(name) + "'");
}

bool is_clusterer(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::KMeans:
    case OperatorKind::MiniBatchKMeans:
    case OperatorKind::DBSCAN:
    case OperatorKind::Agglomerative:
    case OperatorKind::Spectral:
      return true;
    default:
      return false;
  }
}

std::int64_t OperatorConfig::get_int(const std::string& name) const {
  const auto it = hyperparameters.find(name);
  if (it == hyperparameters.end()) throw Error(ErrorCode::InvalidInput, "missing hyperparameter " + name);
  if (const auto* v = std::get_if<std::int64_t>(&it->second)) return *v;
  throw Error(ErrorCode::InvalidInput, "hyperparameter " + name + " is not an integer");
}

double OperatorConfig::get_real(const std::string& name) const {
  const auto it = hyperparameters.find(name);
  if (it == hyperparameters.end()) throw Error(ErrorCode::InvalidInput, "missing hyperparameter " + name);
  if (const auto* v = std::get_if<double>(&it->second)) return *v;
  if (const auto* v = std::get_if<std::int64_t>(&it->second)) return static_cast<double>(*v);
  throw Error(ErrorCode::InvalidInput, "hyperparameter " + name + " is not numeric");
}

const std::string& OperatorConfig::get_name(const std::string& name) const {
  const auto it = hyperparameters.find(name);
  if (it == hyperparameters.end()) throw Error(ErrorCode::InvalidInput, "missing hyperparameter " + name);
  if (const auto* v = std::get_if<std::string>(&it->second)) return *v;
  throw Error(ErrorCode::InvalidInput, "hyperparameter " + name + " is not a name");
}

PipelineSpec::PipelineSpec(std::vector<OperatorConfig> steps) : steps_(std::move(steps)) {
  if (steps_.empty() || steps_.size() > kMaxSteps) {
    throw Error(ErrorCode::InvalidInput, "pipeline length must be in [1,4]");
  }
  for (std::size_t i = 0; i + 1 < steps_.size(); ++i) {
    if (is_clusterer(steps_[i].kind)) {
      throw Error(ErrorCode::InvalidInput, "clusterer " + std::string(to_string(steps_[i].kind)) +
                                               " in non-final position " + std::to_string(i));
    }
  }
  if (!is_clusterer(steps_.back().kind)) {
    throw Error(ErrorCode::InvalidInput, "last pipeline step must be a clusterer");
  }
}

OperatorSpace OperatorSpace::full() {
  OperatorSpace s;
  s.preprocessors = {
      {OperatorKind::MinMaxScaler, {}},
      {OperatorKind::Normalizer, {{"norm", names({"l1", "l2"})}}},
      {OperatorKind::StandardScaler, {}},
      {OperatorKind::VarianceThreshold, {{"threshold", reals({0.1, 0.25})}}},
      {OperatorKind::PCA, {{"n_components", ints({2, 3, 5, 10})}}},
      {OperatorKind::FastICA, {{"n_components", ints({2, 3, 5, 10})}}},
  };
  s.clusterers = {
      {OperatorKind::Agglomerative, {{"n_clusters", int_range(2, 22)}}},
      {OperatorKind::DBSCAN,
       {{"eps", reals({0.001, 0.01, 0.1, 1.0, 10.0, 100.0})}, {"min_samples", int_range(2, 22)}}},
      {OperatorKind::KMeans,
       {{"n_clusters", int_range(2, 22)}, {"init", names({"k-means++", "random"})}}},
      {OperatorKind::MiniBatchKMeans,
       {{"n_clusters", int_range(2, 22)}, {"batch_size", ints({10, 32, 100, 256})}}},
      {OperatorKind::Spectral,
       {{"n_clusters", int_range(2, 22)}, {"affinity", names({"nearest_neighbors", "rbf"})}}},
  };
  return s;
}

OperatorSpace OperatorSpace::kmeans_only(int k_lo, int k_hi) {
  OperatorSpace s;
  s.clusterers = {{OperatorKind::KMeans,
                   {{"n_clusters", int_range(k_lo, k_hi)}, {"init", names({"k-means++"})}}}};
  return s;
}

const OperatorDef& OperatorSpace::def(OperatorKind kind) const {
  for (const auto* list : {&preprocessors, &clusterers}) {
    for (const auto& d : *list) {
      if (d.kind == kind) return d;
    }
  }
  throw Error(ErrorCode::InvalidInput,
              "operator " + std::string(to_string(kind)) + " is not in the search space");
}

std::size_t OperatorSpace::clusterer_configurations() const {
  std::size_t total = 0;
  for (const auto& d : clusterers) {
    std::size_t n = 1;
    for (const auto& g : d.grids) n *= g.values.size();
    total += n;
  }
  return total;
}

void validate(const OperatorConfig& op, const OperatorSpace& space) {
  const auto& d = space.def(op.kind);
  if (op.hyperparameters.size() != d.grids.size()) {
    throw Error(ErrorCode::InvalidInput, std::string(to_string(op.kind)) + ": wrong hyperparameter set");
  }
  for (const auto& g : d.grids) {
    const auto it = op.hyperparameters.find(g.name);
    if (it == op.hyperparameters.end() ||
        std::find(g.values.begin(), g.values.end(), it->second) == g.values.end()) {
      throw Error(ErrorCode::InvalidInput,
                  std::string(to_string(op.kind)) + ": " + g.name + " missing or off-grid");
    }
  }
}

void Deadline::check() const {
  if (end_ && std::chrono::steady_clock::now() > *end_) {
    throw Error(ErrorCode::Timeout, "evaluation budget exceeded");
  }
}

Partition apply_pipeline(const PipelineSpec& pipeline, const Matrix& x, RngStream& rng,
                         const Deadline& deadline) {
  if (!x.allFinite()) throw Error(ErrorCode::InvalidInput, "non-finite input");
  Matrix current = x;
  const auto& steps = pipeline.steps();
  for (std::size_t i = 0; i + 1 < steps.size(); ++i) {
    RngStream step_rng = rng.derive(i);
    try {
      current = fit_transform(steps[i], current, step_rng);
    } catch (const Error& e) {
      throw Error(e.code(), "step " + std::to_string(i) + " (" + std::string(to_string(steps[i].kind)) +
                                "): " + e.detail());
    }
    deadline.check();
  }
  RngStream cluster_rng = rng.derive(steps.size() - 1);
  try {
    return cluster(steps.back(), current, cluster_rng, deadline);
  } catch (const Error& e) {
    throw Error(e.code(), "step " + std::to_string(steps.size() - 1) + " (" +
                              std::string(to_string(steps.back().kind)) + "): " + e.detail());
  }
}

nlohmann::json to_json(const PipelineSpec& p) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : p.steps()) {
    nlohmann::json hp = nlohmann::json::object();
    for (const auto& [name, value] : s.hyperparameters) hp[name] = value_to_json(value);
    steps.push_back({{"kind", std::string(to_string(s.kind))}, {"hyperparameters", hp}});
  }
  return nlohmann::json{{"steps", steps}};
}

PipelineSpec pipeline_from_json(const nlohmann::json& j) {
  try {
    std::vector<OperatorConfig> steps;
    for (const auto& s : j.at("steps")) {
      OperatorConfig op{kind_from_string(s.at("kind").get<std::string>()), {}};
      for (const auto& [name, value] : s.at("hyperparameters").items()) {
        op.hyperparameters.emplace(name, value_from_json(value));
      }
      steps.push_back(std::move(op));
    }
    return PipelineSpec(std::move(steps));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("pipeline JSON: ") + e.what());
  }
}

std::string pipeline_key(const PipelineSpec& p) { return to_json(p).dump(); }

}  // namespace poac::estimators
