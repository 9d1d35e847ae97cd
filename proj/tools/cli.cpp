#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include "poac/datagen.hpp"
#include "poac/error.hpp"
#include "poac/evalstats.hpp"
#include "poac/metabase.hpp"
#include "poac/optimizer.hpp"
#include "poac/parallel.hpp"
#include "poac/surrogate.hpp"

namespace poac::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

std::shared_ptr<spdlog::logger> log() {
  auto l = spdlog::get("poac");
  if (!l) {
    l = spdlog::stderr_logger_mt("poac");
    l->set_pattern("[%Y-%m-%d %H:%M:%S] [%l] %v");
  }
  return l;
}

struct Global {
  int threads = -1;
  std::string log_level = "info";
  std::string run_manifest;
};

struct SynthArgs {
  int count = 100;
  std::string ranges = "training";
  std::uint64_t seed = 0;
  std::string out;
};

struct MetabaseArgs {
  std::string datasets;
  int corruptions = metabase::kDefaultCorruptions;
  std::uint64_t seed = 0;
  std::string out;
};

struct TrainArgs {
  std::string metabase;
  int folds = 10;
  int trees = 100;
  std::string features = "full";
  bool ungrouped = false;
  std::uint64_t seed = 0;
  std::string out_model;
  std::string out_cv;
};

struct OptimizeArgs {
  std::string data;
  std::string model;
  std::string mode = "full";
  std::string space = "full";
  int pop = 24;
  int gens = 10;
  double timeout = 30.0;
  std::uint64_t seed = 0;
  std::string out_pipeline;
  std::string out_labels;
  std::string out_trace;
};

struct EvaluateArgs {
  std::string datasets;
  std::string model;
  std::string cvi_model;
  std::vector<std::string> modes{"full", "cvi", "sil", "dbs"};
  int reps = 3;
  int pop = 24;
  int gens = 10;
  int max_datasets = 0;
  std::string space = "full";
  double timeout = 30.0;
  std::uint64_t seed = 0;
  std::string out;
};

struct StatsArgs {
  std::string results;
  double alpha = 0.05;
  std::string out;
};

bool usage_error(ErrorCode c) { return c == ErrorCode::ConfigError || c == ErrorCode::SpecError; }

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  f << text;
}

void ensure_parent(const std::string& path) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

void write_manifest(const fs::path& path, const CLI::App& app, const CLI::App& sub) {
  nlohmann::json options = nlohmann::json::object();
  auto collect = [&](const CLI::App& a) {
    for (const CLI::Option* opt : a.get_options()) {
      if (opt->get_lnames().empty()) continue;
      const auto& name = opt->get_lnames().front();
      if (name == "help" || name == "config" || name == "run-manifest") continue;
      const auto& res = opt->results();
      if (res.empty()) {
        options[name] = opt->get_default_str();
      } else if (res.size() == 1) {
        options[name] = res.front();
      } else {
        options[name] = res;
      }
    }
  };
  collect(app);
  collect(sub);
  nlohmann::json m{{"program", "poac"},
                   {"version", kVersion},
                   {"command", sub.get_name()},
                   {"options", options},
                   {"threads", num_threads()}};
  write_text(path, m.dump(2) + "\n");
}

std::shared_ptr<const surrogate::SurrogateModel> load_model(const std::string& path) {
  return std::make_shared<const surrogate::SurrogateModel>(surrogate::load(path));
}

estimators::OperatorSpace space_from(const std::string& name) {
  return name == "kmeans" ? estimators::OperatorSpace::kmeans_only(2, 10) : estimators::OperatorSpace::full();
}

optimizer::FitnessMode fitness_for(optimizer::Mode mode, const std::string& model, const std::string& cvi_model) {
  optimizer::FitnessMode fm{mode, nullptr};
  if (mode == optimizer::Mode::Full) {
    if (model.empty()) throw Error(ErrorCode::ConfigError, "--model is required for mode full");
    fm.model = load_model(model);
  } else if (mode == optimizer::Mode::CviOnly) {
    if (cvi_model.empty()) throw Error(ErrorCode::ConfigError, "a CVI-only model is required for mode cvi");
    fm.model = load_model(cvi_model);
  }
  optimizer::validate(fm);
  return fm;
}

int cmd_synth(const SynthArgs& a) {
  const auto ranges = datagen::DatasetSpecRanges::from_name_or_file(a.ranges);
  datagen::validate(ranges);
  fs::create_directories(a.out);
  log()->info("synthesizing {} datasets into {}", a.count, a.out);
  datagen::generate_corpus(a.count, ranges, a.seed, a.out);
  return kExitOk;
}

int cmd_metabase(const MetabaseArgs& a) {
  log()->info("building meta-base from {} with {} corruptions per dataset", a.datasets, a.corruptions);
  metabase::noise_grid(a.corruptions);
  const auto rows = metabase::build_from_directory(a.datasets, a.corruptions, a.seed);
  ensure_parent(a.out);
  metabase::write_csv(rows, a.out);
  log()->info("wrote {} rows to {}", rows.size(), a.out);
  return kExitOk;
}

int cmd_train(const TrainArgs& a) {
  surrogate::ForestParams params;
  params.n_trees = a.trees;
  params.layout = a.features == "cvi" ? surrogate::FeatureLayout::CviOnly : surrogate::FeatureLayout::Full;
  const auto rows = metabase::read_csv(a.metabase);
  log()->info("training on {} meta-base rows ({} features)", rows.size(), a.features);
  const auto data = surrogate::training_data(rows, params.layout);
  if (!a.out_cv.empty()) {
    const auto cv = surrogate::cross_validate(data, params, a.folds, a.seed, !a.ungrouped);
    ensure_parent(a.out_cv);
    surrogate::write_cv_csv(cv, a.out_cv);
    log()->info("{}-fold CV: r2 = {:.4f}, mse = {:.4f}", a.folds, cv.r2, cv.mse);
  }
  const auto model = surrogate::fit(data.names, data.x, data.y, params, a.seed);
  ensure_parent(a.out_model);
  surrogate::save(model, a.out_model);
  const auto imp = surrogate::feature_importance(model);
  for (std::size_t i = 0; i < std::min<std::size_t>(5, imp.size()); ++i) {
    log()->info("importance #{}: {} = {:.4f}", i + 1, imp[i].first, imp[i].second);
  }
  return kExitOk;
}

int cmd_optimize(const OptimizeArgs& a) {
  const auto mode = optimizer::mode_from_string(a.mode);
  const auto fm = fitness_for(mode, a.model, a.model);
  optimizer::EvolutionConfig cfg;
  cfg.population_size = a.pop;
  cfg.generations = a.gens;
  cfg.eval_timeout_s = a.timeout;
  cfg.seed = a.seed;
  optimizer::validate(cfg);
  // Ground truth never reaches the search.
  const Dataset data = strip_labels(load_csv(a.data));
  log()->info("optimizing {} ({} x {}), mode {}", data.id, data.features.rows(), data.features.cols(), a.mode);
  const auto result = optimizer::evolve(data, fm, cfg, space_from(a.space));
  if (result.best_partition.assignments.empty()) {
    throw Error(ErrorCode::SolverError, "no candidate produced a usable partition");
  }
  ensure_parent(a.out_pipeline);
  auto out = estimators::to_json(result.best);
  out["fitness"] = result.best_evaluation.fitness;
  out["mode"] = std::string(optimizer::to_string(mode));
  write_text(a.out_pipeline, out.dump(2) + "\n");
  if (!a.out_labels.empty()) {
    ensure_parent(a.out_labels);
    optimizer::write_labels_csv(result.best_partition, a.out_labels);
  }
  if (!a.out_trace.empty()) {
    ensure_parent(a.out_trace);
    optimizer::write_trace_csv(result.trace, a.out_trace);
  }
  log()->info("best fitness {:.4f} with {} step(s), k = {}", result.best_evaluation.fitness,
              result.best.complexity(), result.best_partition.k);
  return kExitOk;
}

int cmd_evaluate(const EvaluateArgs& a) {
  std::vector<evalstats::AblationRun> runs;
  for (const auto& m : a.modes) {
    const auto mode = optimizer::mode_from_string(m);
    runs.push_back({std::string(optimizer::to_string(mode)), fitness_for(mode, a.model, a.cvi_model)});
  }
  optimizer::EvolutionConfig cfg;
  cfg.population_size = a.pop;
  cfg.generations = a.gens;
  cfg.eval_timeout_s = a.timeout;
  cfg.seed = a.seed;
  optimizer::validate(cfg);
  auto files = datagen::list_corpus(a.datasets);
  if (a.max_datasets > 0 && files.size() > static_cast<std::size_t>(a.max_datasets)) {
    files.resize(static_cast<std::size_t>(a.max_datasets));
  }
  if (files.empty()) throw Error(ErrorCode::ConfigError, "no datasets found in " + a.datasets);
  std::vector<Dataset> datasets;
  for (const auto& f : files) datasets.push_back(load_csv(f));
  log()->info("evaluating {} datasets x {} modes x {} reps", datasets.size(), runs.size(), a.reps);
  const auto table = evalstats::run_ablation(datasets, runs, a.reps, cfg, space_from(a.space));
  ensure_parent(a.out);
  evalstats::write_results_csv(table, a.out);
  for (const auto& s : evalstats::summarize(table)) {
    log()->info("{}: ARI {:.4f}  SIL {:.4f}  DBS {:.4f}  ({} rows, {} excluded)", s.method, s.mean_ari, s.mean_sil,
                s.mean_dbs, s.rows, s.excluded);
  }
  return kExitOk;
}

int cmd_stats(const StatsArgs& a) {
  const auto table = evalstats::read_results_csv(a.results);
  const auto report = evalstats::stats_report(table, a.alpha);
  write_text(a.out, report);
  log()->info("wrote report to {}", a.out);
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"Problem-oriented AutoML for clustering", "poac"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI file with option values");
  Global g;
  app.add_option("--threads", g.threads, "Worker threads (0 = all cores; default POAC_THREADS or all cores)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--log-level", g.log_level, "Log level")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));
  app.add_option("--run-manifest", g.run_manifest, "Where to write the run manifest JSON");

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a labeled synthetic corpus");
  s->add_option("--count", synth.count, "Number of datasets")->check(CLI::Range(1, 1000000));
  s->add_option("--ranges", synth.ranges, "training | validation | JSON ranges file");
  s->add_option("--seed", synth.seed, "Master seed");
  s->add_option("--out", synth.out, "Output directory")->required();

  MetabaseArgs mb;
  auto* m = app.add_subcommand("metabase", "Build the meta-knowledge base from a labeled corpus");
  m->add_option("--datasets", mb.datasets, "Corpus directory")->required()->check(CLI::ExistingDirectory);
  m->add_option("--corruptions", mb.corruptions, "Noise levels per dataset")->check(CLI::PositiveNumber);
  m->add_option("--seed", mb.seed, "Master seed");
  m->add_option("--out", mb.out, "Meta-base CSV")->required();

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Fit the random-forest surrogate");
  t->add_option("--metabase", tr.metabase, "Meta-base CSV")->required()->check(CLI::ExistingFile);
  t->add_option("--folds", tr.folds, "Cross-validation folds")->check(CLI::Range(2, 1000));
  t->add_option("--trees", tr.trees, "Trees in the forest")->check(CLI::PositiveNumber);
  t->add_option("--features", tr.features, "full | cvi")->check(CLI::IsMember({"full", "cvi"}));
  t->add_flag("--ungrouped", tr.ungrouped, "Random row folds instead of dataset-grouped folds");
  t->add_option("--seed", tr.seed, "Master seed");
  t->add_option("--out-model", tr.out_model, "Model JSON")->required();
  t->add_option("--out-cv", tr.out_cv, "Cross-validation CSV");

  OptimizeArgs op;
  auto* o = app.add_subcommand("optimize", "Search a clustering pipeline for one dataset");
  o->add_option("--data", op.data, "Dataset CSV (a label column is ignored)")->required()->check(CLI::ExistingFile);
  o->add_option("--model", op.model, "Surrogate model JSON (modes full and cvi)")->check(CLI::ExistingFile);
  o->add_option("--mode", op.mode, "full | cvi | sil | dbs")->check(CLI::IsMember({"full", "cvi", "sil", "dbs"}));
  o->add_option("--space", op.space, "full | kmeans")->check(CLI::IsMember({"full", "kmeans"}));
  o->add_option("--pop", op.pop, "Population size")->check(CLI::Range(4, 100000));
  o->add_option("--gens", op.gens, "Generations")->check(CLI::NonNegativeNumber);
  o->add_option("--timeout", op.timeout, "Per-candidate time limit in seconds")->check(CLI::PositiveNumber);
  o->add_option("--seed", op.seed, "Master seed");
  o->add_option("--out-pipeline", op.out_pipeline, "Best pipeline JSON")->required();
  o->add_option("--out-labels", op.out_labels, "Labels CSV (row_index,label)");
  o->add_option("--out-trace", op.out_trace, "Per-generation trace CSV");

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Ablation sweep over labeled datasets");
  e->add_option("--datasets", ev.datasets, "Corpus directory")->required()->check(CLI::ExistingDirectory);
  e->add_option("--model", ev.model, "Full surrogate model JSON")->check(CLI::ExistingFile);
  e->add_option("--cvi-model", ev.cvi_model, "CVI-only surrogate model JSON")->check(CLI::ExistingFile);
  e->add_option("--modes", ev.modes, "Comma-separated fitness modes")
      ->delimiter(',')
      ->check(CLI::IsMember({"full", "cvi", "sil", "dbs"}));
  e->add_option("--reps", ev.reps, "Repetitions per dataset and mode")->check(CLI::PositiveNumber);
  e->add_option("--pop", ev.pop, "Population size")->check(CLI::Range(4, 100000));
  e->add_option("--gens", ev.gens, "Generations")->check(CLI::NonNegativeNumber);
  e->add_option("--max-datasets", ev.max_datasets, "Use only the first N datasets (0 = all)")
      ->check(CLI::NonNegativeNumber);
  e->add_option("--space", ev.space, "full | kmeans")->check(CLI::IsMember({"full", "kmeans"}));
  e->add_option("--timeout", ev.timeout, "Per-candidate time limit in seconds")->check(CLI::PositiveNumber);
  e->add_option("--seed", ev.seed, "Master seed");
  e->add_option("--out", ev.out, "Results CSV")->required();

  StatsArgs st;
  auto* r = app.add_subcommand("stats", "Friedman test and Nemenyi critical distance");
  r->add_option("--results", st.results, "Results CSV")->required()->check(CLI::ExistingFile);
  r->add_option("--alpha", st.alpha, "Significance level")->check(CLI::IsMember({0.05, 0.10}));
  r->add_option("--out", st.out, "Report file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex) == 0 ? kExitOk : kExitUsage;
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex) == 0 ? kExitOk : kExitUsage;
  } catch (const CLI::CallForVersion& ex) {
    app.exit(ex);
    return kExitOk;
  } catch (const CLI::ParseError& ex) {
    app.exit(ex);
    return kExitUsage;
  }

  try {
    const auto level = spdlog::level::from_str(g.log_level);
    log()->set_level(level);
    set_num_threads(g.threads >= 0 ? g.threads : threads_from_env());

    CLI::App* sub = app.get_subcommands().front();
    fs::path manifest;
    int code = kExitOk;
    if (sub == s) {
      code = cmd_synth(synth);
      manifest = fs::path(synth.out) / "run_manifest.json";
    } else if (sub == m) {
      code = cmd_metabase(mb);
      manifest = mb.out + ".run.json";
    } else if (sub == t) {
      code = cmd_train(tr);
      manifest = tr.out_model + ".run.json";
    } else if (sub == o) {
      code = cmd_optimize(op);
      manifest = op.out_pipeline + ".run.json";
    } else if (sub == e) {
      code = cmd_evaluate(ev);
      manifest = ev.out + ".run.json";
    } else {
      code = cmd_stats(st);
      manifest = st.out + ".run.json";
    }
    if (!g.run_manifest.empty()) manifest = g.run_manifest;
    write_manifest(manifest, app, *sub);
    return code;
  } catch (const Error& ex) {
    log()->error("{}", ex.what());
    return usage_error(ex.code()) ? kExitUsage : kExitRuntime;
  } catch (const std::exception& ex) {
    log()->error("{}", ex.what());
    return kExitRuntime;
  }
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"poac"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace poac::cli
