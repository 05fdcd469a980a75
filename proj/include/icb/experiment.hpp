#pragma once

// Experiment plumbing shared by the command-line tool: simulate an agent,
// run one inference algorithm, score it, and aggregate repeated runs.

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <iomanip>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "icb/config.hpp"
#include "icb/metrics.hpp"

namespace icb {

struct SimulationArtifacts {
  Dataset dataset;
  GroundTruth truth;
  Json provenance;  // {"config": ..., "seed": ...}
};

inline Json provenance_of(const ExperimentConfig& cfg, bool include_agent = true) {
  Json p;
  p["config"] = experiment_to_json(cfg, include_agent);
  p["seed"] = cfg.seed;
  return p;
}

inline GroundTruth ground_truth_from(const SimulationTrace& trace, const AgentSpec& spec) {
  const Eigen::Index horizon = trace.dataset.horizon();
  const Eigen::Index k = spec.dim();
  GroundTruth gt;
  gt.agent = to_string(spec.kind);
  gt.rho_star = spec.rho_star;
  gt.rho.resize(horizon, k);
  gt.belief_means.resize(horizon, k);
  gt.rewards.resize(horizon);
  for (Eigen::Index t = 0; t < horizon; ++t) {
    const auto ti = static_cast<std::size_t>(t);
    gt.rho.row(t) = trace.latent_rho[ti].transpose();
    gt.belief_means.row(t) = trace.true_belief_mean(ti).transpose();
    gt.rewards(t) = trace.latent_rewards[ti];
  }
  return gt;
}

inline SimulationArtifacts simulate_with_contexts(const ExperimentConfig& cfg, const std::vector<ContextSet>& contexts) {
  const SimulationTrace trace = simulate(cfg.agent, contexts, cfg.agent_seed(), cfg.environment.feature_names());
  SimulationArtifacts out;
  out.dataset = trace.dataset;
  out.truth = ground_truth_from(trace, cfg.agent);
  out.provenance = provenance_of(cfg);
  return out;
}

inline std::vector<ContextSet> contexts_for(const ExperimentConfig& cfg) {
  SyntheticEnvConfig env = cfg.environment;
  env.seed = cfg.env_seed();
  return generate_contexts(env);
}

inline SimulationArtifacts run_simulation(const ExperimentConfig& cfg) {
  return simulate_with_contexts(cfg, contexts_for(cfg));
}

/// Runs `algo` on `data`. `config_echo`/`seed` are stored verbatim so the
/// results file can regenerate itself.
inline Results run_algorithm(const Dataset& data, const AlgorithmConfig& algo, std::uint64_t algorithm_seed,
                             const Json& config_echo, std::uint64_t seed) {
  data.validate();
  const Eigen::Index horizon = data.horizon();
  const Eigen::Index k = data.dim();
  Results r;
  r.algorithm = algo.label();
  r.horizon = horizon;
  r.dim = k;
  r.feature_names = data.feature_names;
  r.config = config_echo;
  r.seed = seed;

  auto constant_beliefs = [&](const Vector& rho) {
    Matrix m(horizon, k);
    m.rowwise() = rho.transpose();
    return m;
  };

  switch (algo.name) {
    case Algorithm::Baseline: {
      const Vector rho = uniform_baseline(k);
      r.rho_star = rho;
      r.belief_means = constant_beliefs(rho);
      break;
    }
    case Algorithm::Model1: {
      Model1Config c = algo.model1;
      c.seed = algorithm_seed;
      const Model1Estimate est = run_icb_model1(data, c);
      r.rho_star = est.rho_star_hat();
      r.beta1 = est.beta1_hat();
      r.belief_means = est.belief_means;
      r.objective_trace = est.objective_trace;
      r.diagnostics["log_diag"] = to_json(est.params.log_diag);
      break;
    }
    case Algorithm::Model2: {
      Model2Config c;
      c.sigma_p = algo.sigma_p.resolve(k);
      c.sigma_b = algo.sigma_b.resolve(k);
      c.alpha = algo.model2.alpha;
      c.burn_in = algo.model2.burn_in;
      c.num_samples = algo.model2.num_samples;
      c.seed = algorithm_seed;
      const Model2Estimate est = run_icb_model2(data, c);
      r.belief_means = est.belief_means;
      r.belief_sd = est.belief_sd;
      break;
    }
    case Algorithm::Irl: {
      IrlConfig c = algo.irl;
      c.seed = algorithm_seed;
      const IrlResult res = bayesian_irl(data, c);
      r.rho_star = res.estimate;
      r.belief_means = constant_beliefs(res.estimate);
      r.diagnostics["acceptance_rate"] = res.acceptance_rate;
      r.diagnostics["num_samples"] = res.samples.size();
      break;
    }
    case Algorithm::MFoldIrl: {
      IrlConfig c = algo.irl;
      c.seed = algorithm_seed;
      const Eigen::Index folds = algo.folds.value_or(horizon);
      if (folds > horizon) throw ConfigError("folds exceeds the dataset horizon");
      const MFoldResult res = mfold_irl(data, folds, c);
      r.belief_means = res.belief_means;
      Json bounds = Json::array();
      for (const auto& [lo, hi] : res.bounds) bounds.push_back({lo, hi});
      r.diagnostics["folds"] = folds;
      r.diagnostics["fold_bounds"] = bounds;
      Json fe = Json::array();
      for (const auto& e : res.fold_estimates) fe.push_back(to_json(e));
      r.diagnostics["fold_estimates"] = fe;
      break;
    }
    case Algorithm::Trex: {
      TrexConfig c = algo.trex;
      c.seed = algorithm_seed;
      const TrexResult res = trex(data, c);
      r.rho_star = normalize_l1(res.estimate);
      r.objective_trace = res.loss_trace;
      r.diagnostics["raw_estimate"] = to_json(res.estimate);
      r.diagnostics["iterations"] = res.iterations;
      break;
    }
  }
  return r;
}

inline MetricsRecord evaluate(const Results& results, const GroundTruth& truth) {
  const Eigen::Index horizon = truth.rho.rows();
  const Eigen::Index k = truth.rho.cols();
  if (results.horizon != horizon || results.dim != k)
    throw std::invalid_argument("results (T=" + std::to_string(results.horizon) + ", k=" +
                                std::to_string(results.dim) + ") and ground truth (T=" + std::to_string(horizon) +
                                ", k=" + std::to_string(k) + ") do not match");
  MetricsRecord m;
  m.agent = truth.agent;
  m.algorithm = results.algorithm;
  m.seed = results.seed;
  m.feature_names = results.feature_names;
  if (results.belief_means) {
    m.belief_error = belief_error_series(truth.belief_means, *results.belief_means);
    Matrix imp(horizon, k);
    for (Eigen::Index t = 0; t < horizon; ++t) {
      try {
        imp.row(t) = feature_importance(results.belief_means->row(t).transpose()).transpose();
      } catch (const std::domain_error&) {
        imp.row(t).setConstant(std::numeric_limits<double>::quiet_NaN());
      }
    }
    m.importance = imp;
  }
  if (results.rho_star) m.true_reward_error = normalized_l1_error(truth.rho_star, *results.rho_star);
  return m;
}

// ---- Aggregation -----------------------------------------------------------

struct ReportRow {
  std::string agent;
  std::string algorithm;
  std::size_t repetitions = 0;
  std::optional<Summary> belief_error;
  std::optional<Summary> variation;
  std::optional<Summary> true_reward_error;
  std::vector<double> error_mean;  // per-time, averaged over repetitions
  std::vector<double> error_sd;
  std::vector<std::string> feature_names;
  std::optional<Matrix> importance;  // per-time mean over repetitions (NaN rows skipped)
};

namespace detail {

inline int agent_rank(const std::string& a) {
  static const std::vector<std::string> order{"stationary", "sampling", "stepping", "regressing"};
  const auto it = std::find(order.begin(), order.end(), a);
  return static_cast<int>(it - order.begin());
}

inline int algorithm_rank(const std::string& a) {
  if (a == "baseline") return 0;
  if (a == "irl") return 1;
  if (a.ends_with("-fold-irl")) return a.starts_with("T-") ? 3 : 2;
  if (a == "trex") return 4;
  if (a == "icb-model1") return 5;
  if (a == "icb-model2") return 6;
  return 7;
}

}  // namespace detail

inline std::vector<ReportRow> aggregate(const std::vector<MetricsRecord>& records) {
  if (records.empty()) throw std::invalid_argument("report needs at least one metrics record");
  std::map<std::pair<std::string, std::string>, std::vector<const MetricsRecord*>> cells;
  for (const auto& r : records) cells[{r.agent, r.algorithm}].push_back(&r);

  std::vector<ReportRow> rows;
  for (const auto& [key, group] : cells) {
    ReportRow row;
    row.agent = key.first;
    row.algorithm = key.second;
    row.repetitions = group.size();
    row.feature_names = group.front()->feature_names;

    const MetricsRecord& first = *group.front();
    for (const MetricsRecord* m : group) {
      if (m->feature_names != first.feature_names || m->belief_error.has_value() != first.belief_error.has_value() ||
          m->true_reward_error.has_value() != first.true_reward_error.has_value() ||
          (m->belief_error && m->belief_error->per_time.size() != first.belief_error->per_time.size()))
        throw std::invalid_argument("inconsistent record shapes for " + row.agent + " / " + row.algorithm);
    }

    if (first.belief_error) {
      std::vector<double> means, vars;
      for (const MetricsRecord* m : group) {
        means.push_back(m->belief_error->mean);
        vars.push_back(m->belief_error->variation);
      }
      row.belief_error = summarize(means);
      row.variation = summarize(vars);
      const std::size_t horizon = first.belief_error->per_time.size();
      for (std::size_t t = 0; t < horizon; ++t) {
        std::vector<double> v;
        for (const MetricsRecord* m : group) v.push_back(m->belief_error->per_time[t]);
        const Summary s = summarize(v);
        row.error_mean.push_back(s.mean);
        row.error_sd.push_back(s.std);
      }
    }
    if (first.true_reward_error) {
      std::vector<double> errs;
      for (const MetricsRecord* m : group) errs.push_back(*m->true_reward_error);
      row.true_reward_error = summarize(errs);
    }
    if (first.importance) {
      const Eigen::Index horizon = first.importance->rows();
      const Eigen::Index k = first.importance->cols();
      Matrix sum = Matrix::Zero(horizon, k);
      Vector count = Vector::Zero(horizon);
      for (const MetricsRecord* m : group) {
        if (!m->importance || m->importance->rows() != horizon || m->importance->cols() != k)
          throw std::invalid_argument("inconsistent importance shapes for " + row.agent + " / " + row.algorithm);
        for (Eigen::Index t = 0; t < horizon; ++t) {
          if (!m->importance->row(t).allFinite()) continue;
          sum.row(t) += m->importance->row(t);
          count(t) += 1.0;
        }
      }
      Matrix mean(horizon, k);
      for (Eigen::Index t = 0; t < horizon; ++t) {
        if (count(t) > 0.0) mean.row(t) = sum.row(t) / count(t);
        else mean.row(t).setConstant(std::numeric_limits<double>::quiet_NaN());
      }
      row.importance = mean;
    }
    rows.push_back(std::move(row));
  }
  std::stable_sort(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) {
    const auto ka = std::tuple(detail::algorithm_rank(a.algorithm), a.algorithm, detail::agent_rank(a.agent), a.agent);
    const auto kb = std::tuple(detail::algorithm_rank(b.algorithm), b.algorithm, detail::agent_rank(b.agent), b.agent);
    return ka < kb;
  });
  return rows;
}

inline std::string format_cell(const std::optional<Summary>& s, double scale = 1.0, int precision = 3) {
  if (!s) return "-";
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << s->mean * scale << " ± " << s->std * scale;
  return os.str();
}

/// Aligned plain-text table, one line per (agent, algorithm).
inline std::string format_table(const std::vector<ReportRow>& rows) {
  std::vector<std::array<std::string, 6>> lines;
  lines.push_back({"algorithm", "agent", "n", "belief error", "variation (x1e-3)", "true reward error"});
  for (const auto& r : rows)
    lines.push_back({r.algorithm, r.agent, std::to_string(r.repetitions), format_cell(r.belief_error),
                     format_cell(r.variation, 1e3, 2), format_cell(r.true_reward_error)});
  std::array<std::size_t, 6> width{};
  auto display_width = [](const std::string& s) {
    std::size_t n = 0;
    for (unsigned char c : s) n += (c & 0xC0) != 0x80;  // count UTF-8 code points
    return n;
  };
  for (const auto& l : lines)
    for (std::size_t i = 0; i < l.size(); ++i) width[i] = std::max(width[i], display_width(l[i]));
  std::ostringstream os;
  for (const auto& l : lines) {
    for (std::size_t i = 0; i < l.size(); ++i) {
      os << l[i];
      if (i + 1 < l.size()) os << std::string(width[i] - display_width(l[i]) + 2, ' ');
    }
    os << '\n';
  }
  return os.str();
}

inline Json report_to_json(const std::vector<ReportRow>& rows) {
  auto summary_json = [](const std::optional<Summary>& s) {
    return s ? Json{{"mean", s->mean}, {"std", s->std}} : Json();
  };
  Json out;
  out["version"] = kFormatVersion;
  out["kind"] = "report";
  Json arr = Json::array();
  for (const auto& r : rows) {
    Json j;
    j["agent"] = r.agent;
    j["algorithm"] = r.algorithm;
    j["repetitions"] = r.repetitions;
    j["belief_error"] = summary_json(r.belief_error);
    j["variation"] = summary_json(r.variation);
    j["true_reward_error"] = summary_json(r.true_reward_error);
    arr.push_back(j);
  }
  out["rows"] = arr;
  return out;
}

/// CSV with per-time error and per-feature importance columns.
inline std::string plot_csv(const ReportRow& row) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "t,error_mean,error_sd";
  for (const auto& f : row.feature_names) os << ",importance_" << f;
  os << '\n';
  const std::size_t horizon =
      std::max(row.error_mean.size(), row.importance ? static_cast<std::size_t>(row.importance->rows()) : 0);
  for (std::size_t t = 0; t < horizon; ++t) {
    os << t + 1;
    if (t < row.error_mean.size()) os << ',' << row.error_mean[t] << ',' << row.error_sd[t];
    else os << ",,";
    for (std::size_t j = 0; j < row.feature_names.size(); ++j) {
      os << ',';
      if (row.importance) {
        const double v = (*row.importance)(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j));
        if (std::isfinite(v)) os << v;
      }
    }
    os << '\n';
  }
  return os.str();
}

inline std::string plot_file_name(const ReportRow& row) { return "plot_" + row.agent + "_" + row.algorithm + ".csv"; }

/// Writes summary.json, table.txt and one plot CSV per row into `dir`.
inline void write_report(const std::filesystem::path& dir, const std::vector<ReportRow>& rows) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
  {
    auto out = open_for_write((dir / "summary.json").string());
    out << report_to_json(rows).dump(1) << '\n';
  }
  {
    auto out = open_for_write((dir / "table.txt").string());
    out << format_table(rows);
  }
  for (const auto& r : rows) {
    auto out = open_for_write((dir / plot_file_name(r)).string());
    out << plot_csv(r);
  }
}

// ---- Sweeps ----------------------------------------------------------------

/// The seven algorithm columns of the comparison tables, at `scale`.
inline std::vector<AlgorithmConfig> default_algorithms(Scale scale) {
  std::vector<AlgorithmConfig> out;
  for (const char* name : {"baseline", "irl", "mfold-irl", "mfold-irl", "trex", "icb-model1", "icb-model2"}) {
    Json j{{"name", name}};
    if (std::string(name) == "mfold-irl") j["folds"] = out.size() == 2 ? Json(10) : Json("T");
    out.push_back(parse_algorithm_config(j, scale));
  }
  return out;
}

inline AgentSpec agent_for_sweep(AgentKind kind, const ExperimentConfig& base) {
  AgentSpec a = AgentSpec::with_defaults(kind, base.environment.horizon, base.agent.rho_star);
  a.alpha = base.agent.alpha;
  a.sigma = base.agent.sigma;
  a.update_rule = base.agent.update_rule;
  if (kind == base.agent.kind) a = base.agent;
  if (!a.t_star && (kind == AgentKind::Stepping || kind == AgentKind::Regressing))
    a.t_star = base.environment.horizon / 2;
  if (kind == AgentKind::Regressing && !a.gamma) a.gamma = 0.0;
  return a;
}

struct SweepRun {
  ExperimentConfig config;  // agent + algorithm fully resolved, repetition seed
  int repetition = 0;
};

struct SweepOptions {
  std::vector<AgentKind> agents{AgentKind::Stationary, AgentKind::Sampling, AgentKind::Stepping,
                                AgentKind::Regressing};
  std::vector<AlgorithmConfig> algorithms;
  unsigned jobs = 1;
};

/// Expands (repetition, agent, algorithm) into independent run configs. Every
/// repetition shares one context stream across agents.
inline std::vector<SweepRun> plan_sweep(const ExperimentConfig& base, const SweepOptions& opts) {
  std::vector<SweepRun> runs;
  for (int rep = 0; rep < base.repetitions; ++rep) {
    const std::uint64_t rep_seed = derive_seed(base.seed, seed_stream::repetition + static_cast<std::uint64_t>(rep));
    for (AgentKind kind : opts.agents) {
      for (const auto& algo : opts.algorithms) {
        ExperimentConfig c = base;
        c.columns.clear();
        c.repetitions = 1;
        c.seed = rep_seed;
        c.environment_seed = derive_seed(rep_seed, seed_stream::environment);
        c.agent = agent_for_sweep(kind, base);
        c.algorithm = algo;
        runs.push_back({c, rep});
      }
    }
  }
  return runs;
}

/// Output of one sweep cell; `config` regenerates it through the pipeline.
struct SweepOutcome {
  SweepRun run;
  MetricsRecord metrics;
};

inline MetricsRecord run_pipeline(const ExperimentConfig& cfg) {
  if (!cfg.algorithm) throw ConfigError("config has no algorithm section");
  const SimulationArtifacts sim = run_simulation(cfg);
  const Results res = run_algorithm(sim.dataset, *cfg.algorithm, cfg.algorithm_seed(), provenance_of(cfg)["config"],
                                    cfg.seed);
  return evaluate(res, sim.truth);
}

/// Runs every planned cell, fanning out over `opts.jobs` threads. Output order
/// follows the plan, independent of scheduling.
template <class Progress>
std::vector<SweepOutcome> run_sweep(const std::vector<SweepRun>& runs, unsigned jobs, Progress&& progress) {
  std::vector<SweepOutcome> out(runs.size());
  std::vector<std::exception_ptr> errors(runs.size());
  std::atomic<std::size_t> next{0};
  std::mutex progress_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < runs.size(); i = next++) {
      try {
        out[i] = {runs[i], run_pipeline(runs[i].config)};
      } catch (...) {
        errors[i] = std::current_exception();
      }
      std::lock_guard lock(progress_mutex);
      progress(i, runs[i]);
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(runs.size())));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < n; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

inline std::vector<SweepOutcome> run_sweep(const std::vector<SweepRun>& runs, unsigned jobs = 1) {
  return run_sweep(runs, jobs, [](std::size_t, const SweepRun&) {});
}

}  // namespace icb
