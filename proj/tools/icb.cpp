// icb: simulate learning agents, infer their beliefs, and score the estimates.
//
// Exit codes: 0 success, 1 I/O failure, 2 configuration or input validation
// error, 3 numerical failure.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "icb/icb.hpp"

namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kIo = 1, kInvalid = 2, kNumerical = 3 };

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string scale;
  std::string out;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool out_required = true) {
  cmd->add_option("--seed", o.seed, "Master seed (overrides the config)");
  cmd->add_option("--scale", o.scale, "Size profile")->check(CLI::IsMember({"full", "desk"}));
  auto* out = cmd->add_option("--out", o.out, "Output path");
  if (out_required) out->required();
}

std::optional<icb::Scale> scale_override(const CommonOptions& o) {
  if (o.scale.empty()) return std::nullopt;
  return icb::parse_scale(o.scale);
}

icb::ExperimentConfig load_config(const CommonOptions& o, bool require_agent) {
  const icb::Json doc = o.config.empty() ? icb::Json::object() : icb::read_json_document(o.config);
  icb::ExperimentConfig cfg = icb::parse_experiment_config(doc, scale_override(o), require_agent);
  if (o.seed) cfg.seed = *o.seed;
  return cfg;
}

int cmd_simulate(const CommonOptions& o) {
  const icb::ExperimentConfig cfg = load_config(o, true);
  const icb::SimulationArtifacts sim = icb::run_simulation(cfg);
  const std::string data_path = o.out + ".dataset.jsonl";
  const std::string truth_path = o.out + ".truth.jsonl";
  icb::save_dataset(data_path, sim.dataset, sim.provenance);
  icb::save_ground_truth(truth_path, sim.truth, sim.provenance);
  std::cout << "T=" << sim.dataset.horizon() << " k=" << sim.dataset.dim() << " agent=" << sim.truth.agent
            << " seed=" << cfg.seed << "\n"
            << "wrote " << data_path << "\n"
            << "wrote " << truth_path << "\n";
  return kOk;
}

struct InferOptions {
  std::string dataset;
  std::string algorithm;
  std::optional<std::string> folds;
};

int cmd_infer(const CommonOptions& o, const InferOptions& io) {
  const icb::LoadedDataset loaded = icb::load_dataset(io.dataset);

  // Without --config the dataset's own provenance supplies environment and agent.
  icb::Json doc = o.config.empty() ? loaded.header : icb::read_json_document(o.config);
  if (!doc.contains("config")) doc = icb::Json{{"config", doc}};
  if (!io.algorithm.empty()) {
    icb::Json algo{{"name", io.algorithm}};
    if (io.folds) {
      if (*io.folds == "T") algo["folds"] = "T";
      else algo["folds"] = std::stol(*io.folds);
    }
    doc["config"]["algorithm"] = algo;
  } else if (io.folds) {
    throw icb::ConfigError("--folds requires --algorithm mfold-irl");
  }
  icb::ExperimentConfig cfg = icb::parse_experiment_config(doc, scale_override(o), false);
  if (o.seed) cfg.seed = *o.seed;
  if (!cfg.algorithm) throw icb::ConfigError("no algorithm given (use --algorithm or an 'algorithm' config section)");

  const bool has_agent = doc["config"].contains("agent");
  const icb::Results res = icb::run_algorithm(loaded.dataset, *cfg.algorithm, cfg.algorithm_seed(),
                                              icb::experiment_to_json(cfg, has_agent), cfg.seed);
  icb::save_results(o.out, res);
  std::cout << "algorithm=" << res.algorithm << " T=" << res.horizon << " k=" << res.dim << " seed=" << res.seed
            << "\n";
  if (res.rho_star) {
    std::cout << "rho_star =";
    for (double v : *res.rho_star) std::cout << ' ' << v;
    std::cout << "\n";
  }
  if (!res.objective_trace.empty()) std::cout << "final objective = " << res.objective_trace.back() << "\n";
  std::cout << "wrote " << o.out << "\n";
  return kOk;
}

int cmd_evaluate(const std::string& results_path, const std::string& truth_path, const std::string& out) {
  const icb::Results res = icb::load_results(results_path);
  const icb::GroundTruth gt = icb::load_ground_truth(truth_path);
  const icb::MetricsRecord m = icb::evaluate(res, gt);
  const auto rows = icb::aggregate({m});
  std::cout << icb::format_table(rows);
  if (!out.empty()) {
    icb::save_metrics(out, m);
    std::cout << "wrote " << out << "\n";
  }
  return kOk;
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& out) {
  std::vector<icb::MetricsRecord> records;
  for (const auto& path : inputs) {
    if (fs::is_directory(path)) {
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(path))
        if (e.path().extension() == ".json") files.push_back(e.path());
      std::sort(files.begin(), files.end());
      for (const auto& f : files) records.push_back(icb::load_metrics(f.string()));
    } else {
      records.push_back(icb::load_metrics(path));
    }
  }
  const auto rows = icb::aggregate(records);
  std::cout << icb::format_table(rows);
  if (!out.empty()) {
    icb::write_report(out, rows);
    std::cout << "wrote " << out << "\n";
  }
  return kOk;
}

int cmd_sweep(const CommonOptions& o, const std::vector<std::string>& algorithms, unsigned jobs) {
  icb::ExperimentConfig base = load_config(o, false);
  icb::SweepOptions opts;
  opts.jobs = jobs;
  const auto all = base.columns.empty() ? icb::default_algorithms(base.scale) : base.columns;
  if (algorithms.empty()) opts.algorithms = all;
  for (const auto& name : algorithms) {
    const auto it = std::find_if(all.begin(), all.end(), [&](const auto& a) { return a.label() == name; });
    if (it == all.end()) throw icb::ConfigError("unknown algorithm column '" + name + "'");
    opts.algorithms.push_back(*it);
  }
  const auto runs = icb::plan_sweep(base, opts);
  const fs::path dir(o.out);
  const fs::path metrics_dir = dir / "metrics";
  std::error_code ec;
  fs::create_directories(metrics_dir, ec);
  if (ec) throw icb::IoError("cannot create directory '" + metrics_dir.string() + "': " + ec.message());

  std::size_t done = 0;
  const auto outcomes = icb::run_sweep(runs, jobs, [&](std::size_t, const icb::SweepRun& r) {
    std::cerr << "[" << ++done << "/" << runs.size() << "] rep " << r.repetition << " "
              << icb::to_string(r.config.agent.kind) << " " << r.config.algorithm->label() << "\n";
  });
  std::vector<icb::MetricsRecord> records;
  for (const auto& oc : outcomes) {
    const std::string stem = "rep" + std::to_string(oc.run.repetition) + "_" +
                             icb::to_string(oc.run.config.agent.kind) + "_" + oc.run.config.algorithm->label();
    icb::save_metrics((metrics_dir / (stem + ".json")).string(), oc.metrics);
    auto cfg_out = icb::open_for_write((metrics_dir / (stem + ".config.json")).string());
    cfg_out << icb::provenance_of(oc.run.config).dump(1) << '\n';
    records.push_back(oc.metrics);
  }
  const auto rows = icb::aggregate(records);
  icb::write_report(dir, rows);
  std::cout << icb::format_table(rows) << "wrote " << dir.string() << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inverse contextual bandits: infer evolving beliefs of learning agents"};
  app.require_subcommand(1);

  CommonOptions sim_opts;
  auto* sim = app.add_subcommand("simulate", "Generate contexts and simulate an agent");
  sim->add_option("--config", sim_opts.config, "Experiment config (or any artifact embedding one)")
      ->required()
      ->check(CLI::ExistingFile);
  add_common(sim, sim_opts);

  CommonOptions inf_opts;
  InferOptions inf;
  auto* infer = app.add_subcommand("infer", "Run an inference algorithm on a dataset");
  infer->add_option("--dataset", inf.dataset, "Dataset file")->required()->check(CLI::ExistingFile);
  infer->add_option("--config", inf_opts.config, "Config with an algorithm section")->check(CLI::ExistingFile);
  infer->add_option("--algorithm", inf.algorithm, "Algorithm name")
      ->check(CLI::IsMember({"icb-model1", "icb-model2", "irl", "mfold-irl", "trex", "baseline"}));
  infer->add_option("--folds", inf.folds, "Fold count for mfold-irl (integer or T)");
  add_common(infer, inf_opts);

  std::string eval_results, eval_truth, eval_out;
  auto* eval = app.add_subcommand("evaluate", "Score results against ground truth");
  eval->add_option("--results", eval_results, "Results file")->required()->check(CLI::ExistingFile);
  eval->add_option("--truth", eval_truth, "Ground-truth file")->required()->check(CLI::ExistingFile);
  eval->add_option("--out", eval_out, "Metrics record output");

  std::vector<std::string> report_inputs;
  std::string report_out;
  auto* report = app.add_subcommand("report", "Aggregate metrics records into tables and plot data");
  report->add_option("inputs", report_inputs, "Metrics files or directories")->required()->check(CLI::ExistingPath);
  report->add_option("--out", report_out, "Report directory");

  CommonOptions sweep_opts;
  std::vector<std::string> sweep_algorithms;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  auto* sweep = app.add_subcommand("sweep", "Run every agent against every algorithm over repetitions");
  sweep->add_option("--config", sweep_opts.config, "Base experiment config")->check(CLI::ExistingFile);
  sweep->add_option("--algorithms", sweep_algorithms, "Subset of algorithm columns");
  sweep->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  add_common(sweep, sweep_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kInvalid;
  }

  try {
    if (*sim) return cmd_simulate(sim_opts);
    if (*infer) return cmd_infer(inf_opts, inf);
    if (*eval) return cmd_evaluate(eval_results, eval_truth, eval_out);
    if (*report) return cmd_report(report_inputs, report_out);
    if (*sweep) return cmd_sweep(sweep_opts, sweep_algorithms, jobs);
  } catch (const icb::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kNumerical;
  } catch (const icb::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const icb::FormatError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kInvalid;
  } catch (const icb::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kInvalid;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  }
  return kOk;
}
