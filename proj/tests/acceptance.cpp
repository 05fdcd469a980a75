// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails.
//
//   icb_acceptance [--scale full|desk] [--seed N] [--repetitions N]

#include <chrono>
#include <cstdlib>
#include <iomanip>
#include <iostream>

#include "support.hpp"

using namespace icb;
using icb::test::close_relative;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int failures = 0;

  void report(int id, bool ok, const std::string& what, const std::string& detail) {
    if (!ok) ++failures;
    std::cout << (ok ? "PASS" : "FAIL") << " [" << id << "] " << what << " | " << detail << std::endl;
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v, int precision = 3) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(precision) << v;
  return out.str();
}

// ---- 1: deterministic cells ---------------------------------------------------

void criterion_baseline_cells(Outcome& out) {
  const auto start = Clock::now();
  auto cell = [](AgentKind kind) {
    ExperimentConfig cfg;
    cfg.agent = AgentSpec::with_defaults(kind, cfg.environment.horizon);
    if (kind == AgentKind::Regressing) cfg.agent.gamma = 0.0;
    cfg.seed = 1;
    AlgorithmConfig algo;
    algo.name = Algorithm::Baseline;
    cfg.algorithm = algo;
    return run_pipeline(cfg);
  };
  const auto stationary = cell(AgentKind::Stationary);
  const auto stepping = cell(AgentKind::Stepping);
  const auto regressing = cell(AgentKind::Regressing);
  const double elapsed = seconds_since(start);
  const bool ok = fmt(stationary.belief_error->mean) == "0.183" && fmt(stationary.belief_error->variation) == "0.000" &&
                  fmt(*stationary.true_reward_error) == "0.183" &&
                  std::abs(stepping.belief_error->mean - 0.092) <= 0.001 &&
                  std::abs(regressing.belief_error->mean - 0.092) <= 0.001 && elapsed < 1.0;
  out.report(1, ok, "baseline cells",
             "stationary " + fmt(stationary.belief_error->mean) + " (variation " +
                 fmt(stationary.belief_error->variation) + ", true-reward " + fmt(*stationary.true_reward_error) +
                 "), stepping " + fmt(stepping.belief_error->mean, 4) + ", regressing " +
                 fmt(regressing.belief_error->mean, 4) + ", " + fmt(elapsed, 2) + " s");
}

// ---- 2-4: the comparison sweep ------------------------------------------------

struct Table {
  std::vector<ReportRow> rows;

  const ReportRow& at(const std::string& agent, const std::string& algorithm) const {
    for (const auto& r : rows)
      if (r.agent == agent && r.algorithm == algorithm) return r;
    throw std::out_of_range("missing cell " + agent + "/" + algorithm);
  }
  double error(const std::string& agent, const std::string& algorithm) const {
    return at(agent, algorithm).belief_error->mean;
  }
  double variation(const std::string& agent, const std::string& algorithm) const {
    return at(agent, algorithm).variation->mean;
  }
};

Table run_comparison(Scale scale, std::uint64_t seed, int repetitions) {
  const Json doc{{"scale", to_string(scale)}, {"seed", seed}, {"repetitions", repetitions}};
  const ExperimentConfig base = parse_experiment_config(doc, std::nullopt, false);
  SweepOptions opts;
  opts.algorithms = default_algorithms(scale);
  opts.jobs = std::max(1u, std::thread::hardware_concurrency());
  const auto runs = plan_sweep(base, opts);
  const auto start = Clock::now();
  const auto outcomes = run_sweep(runs, opts.jobs);
  std::vector<MetricsRecord> records;
  for (const auto& o : outcomes) records.push_back(o.metrics);
  Table t{aggregate(records)};
  std::cout << "comparison sweep: " << runs.size() << " runs, T=" << base.environment.horizon << ", "
            << repetitions << " repetitions, " << fmt(seconds_since(start), 0) << " s\n"
            << format_table(t.rows) << std::endl;
  return t;
}

const std::vector<std::string> kAgents{"stationary", "sampling", "stepping", "regressing"};
const std::vector<std::string> kLearningAgents{"sampling", "stepping", "regressing"};

void criterion_belief_error(Outcome& out, const Table& t, Scale scale) {
  std::string detail;
  bool ok = true;
  if (scale == Scale::Full) {
    for (const char* agent : {"stationary", "sampling"}) {
      const double e = t.error(agent, "icb-model1");
      ok &= e <= 0.05;
      detail += std::string("model1/") + agent + " " + fmt(e) + " (<= 0.05); ";
    }
    for (const char* agent : {"stepping", "regressing"}) {
      const double e = t.error(agent, "icb-model2");
      ok &= e <= 0.10;
      detail += std::string("model2/") + agent + " " + fmt(e) + " (<= 0.10); ";
    }
  } else {
    detail += "desk scale: orderings only; ";
  }
  int beaten = 0, total = 0;
  std::string misses;
  for (const auto& agent : kAgents) {
    for (const char* icb : {"icb-model1", "icb-model2"}) {
      for (const char* rival : {"baseline", "10-fold-irl", "T-fold-irl"}) {
        ++total;
        if (t.error(agent, icb) < t.error(agent, rival)) ++beaten;
        else misses += std::string(" ") + icb + "/" + agent + ">=" + rival;
      }
    }
  }
  ok &= beaten == total;
  detail += "orderings " + std::to_string(beaten) + "/" + std::to_string(total);
  if (!misses.empty()) detail += " (" + misses.substr(1) + ")";
  out.report(2, ok, "belief error reproduction", detail);
}

void criterion_true_reward(Outcome& out, const Table& t) {
  const double model1 = t.at("sampling", "icb-model1").true_reward_error->mean;
  const double trex = t.at("sampling", "trex").true_reward_error->mean;
  out.report(3, model1 <= 0.08 && trex >= 0.5, "true reward on sampling-agent data",
             "model1 " + fmt(model1) + " (<= 0.08), trex " + fmt(trex) + " (>= 0.5)");
}

void criterion_variation(Outcome& out, const Table& t) {
  bool ok = true;
  std::string detail;
  for (const auto& agent : kLearningAgents) {
    const double icb = std::min(t.variation(agent, "icb-model1"), t.variation(agent, "icb-model2"));
    const double fold10 = t.variation(agent, "10-fold-irl");
    const double foldT = t.variation(agent, "T-fold-irl");
    ok &= icb < fold10 && icb < foldT;
    detail += agent + " icb " + fmt(1e3 * icb, 1) + " vs 10-fold " + fmt(1e3 * fold10, 1) + ", T-fold " +
              fmt(1e3 * foldT, 1) + " (x1e-3); ";
  }
  out.report(4, ok, "per-time error variation", detail.substr(0, detail.size() - 2));
}

void informational_standard_bayes(Scale scale, std::uint64_t seed, int repetitions) {
  Json doc{{"scale", to_string(scale)},
           {"seed", seed},
           {"repetitions", repetitions},
           {"agent", {{"kind", "sampling"}, {"standard_bayes_mean_update", true}}}};
  const ExperimentConfig base = parse_experiment_config(doc);
  SweepOptions opts;
  opts.agents = {AgentKind::Sampling};
  opts.algorithms = {default_algorithms(scale)[0],
                     parse_algorithm_config(Json{{"name", "icb-model1"}, {"standard_bayes_mean_update", true}}, scale)};
  opts.jobs = std::max(1u, std::thread::hardware_concurrency());
  std::vector<MetricsRecord> records;
  for (const auto& o : run_sweep(plan_sweep(base, opts), opts.jobs)) records.push_back(o.metrics);
  const Table t{aggregate(records)};
  const auto& m1 = t.at("sampling", "icb-model1");
  std::cout << "INFO [-] sampling agent and model1 under the standard-Bayes mean update | belief error "
            << fmt(m1.belief_error->mean) << " +- " << fmt(m1.belief_error->std) << ", true-reward "
            << fmt(m1.true_reward_error->mean) << ", variation x1e-3 " << fmt(1e3 * m1.variation->mean, 1)
            << ", baseline " << fmt(t.error("sampling", "baseline")) << std::endl;
}

// ---- 5: conditional oracles ---------------------------------------------------

void criterion_oracles(Outcome& out) {
  const auto start = Clock::now();
  Rng rng(2024);
  double worst_reward = 0.0, worst_nu = 0.0;
  int reward_checks = 0, reward_ok = 0, nu_checks = 0, nu_ok = 0;
  auto rel = [](double a, double b, double scale) { return std::abs(a - b) / (std::abs(b) + scale); };
  for (int instance = 0; instance < 20; ++instance) {
    const Eigen::Index k = 1 + instance % 2;
    const Eigen::Index horizon = 2 + instance % 3;
    const auto rule = instance < 10 ? MeanUpdateRule::AsWritten : MeanUpdateRule::StandardBayes;
    const Matrix x = icb::test::random_matrix(horizon, k, rng);
    const GaussianBelief beta1{icb::test::random_vector(k, rng), icb::test::random_spd(k, rng, 0.5)};
    const Vector rho = icb::test::random_vector(k, rng);
    const RewardChain chain = icb::test::random_chain(horizon, k, rng);
    const BeliefSchedule schedule(beta1, x, 0.25, rule == MeanUpdateRule::AsWritten ? 1.0 : 16.0);
    for (Eigen::Index t = 0; t < horizon; ++t) {
      const auto cond = reward_conditional(t, chain, rho, schedule);
      const double half_width = 12.0 * std::sqrt(cond.variance);
      const auto grid = icb::test::grid_moments_1d(
          [&](double r) { return icb::test::reward_log_density(t, r, chain, rho, beta1, x, 0.25, rule); },
          cond.mean - half_width, cond.mean + half_width, 20001);
      reward_checks += 2;
      reward_ok += close_relative(cond.mean, grid.mean, 1e-2, 1e-2);
      reward_ok += close_relative(cond.variance, grid.variance, 1e-2, 0.0);
      worst_reward = std::max({worst_reward, rel(cond.mean, grid.mean, 1e-2), rel(cond.variance, grid.variance, 0.0)});
    }
  }
  for (int instance = 0; instance < 20; ++instance) {
    const Eigen::Index k = 1 + instance % 2;
    const Eigen::Index horizon = 2 + instance % 3;
    const IncrementChain chain = icb::test::random_increments(horizon, k, rng);
    const Matrix sigma_p = icb::test::random_spd(k, rng, 0.05);
    const Matrix sigma_b = icb::test::random_spd(k, rng, 0.05);
    for (Eigen::Index t = 0; t < horizon; ++t) {
      if (k == 2 && t != instance % horizon) continue;
      const auto cond = nu_conditional(t, chain, sigma_p, sigma_b);
      const Vector sd = cond.covariance.diagonal().cwiseSqrt();
      Vector mean;
      Matrix cov;
      if (k == 1) {
        const auto g = icb::test::grid_moments_1d(
            [&](double v) { return icb::test::nu_log_density(t, Vector::Constant(1, v), chain, sigma_p, sigma_b); },
            cond.mean(0) - 12.0 * sd(0), cond.mean(0) + 12.0 * sd(0), 20001);
        mean = Vector::Constant(1, g.mean);
        cov = Matrix::Constant(1, 1, g.variance);
      } else {
        const auto g = icb::test::grid_moments_2d(
            [&](const Vector& v) { return icb::test::nu_log_density(t, v, chain, sigma_p, sigma_b); }, cond.mean,
            10.0 * sd, 401);
        mean = g.mean;
        cov = g.covariance;
      }
      for (Eigen::Index i = 0; i < k; ++i) {
        ++nu_checks;
        nu_ok += close_relative(cond.mean(i), mean(i), 1e-3, sd(i));
        worst_nu = std::max(worst_nu, rel(cond.mean(i), mean(i), sd(i)));
        for (Eigen::Index j = 0; j < k; ++j) {
          ++nu_checks;
          nu_ok += close_relative(cond.covariance(i, j), cov(i, j), 1e-3, sd(i) * sd(j));
          worst_nu = std::max(worst_nu, rel(cond.covariance(i, j), cov(i, j), sd(i) * sd(j)));
        }
      }
    }
  }
  const double elapsed = seconds_since(start);
  out.report(5, reward_ok == reward_checks && nu_ok == nu_checks && elapsed < 60.0, "conditional moments vs grid",
             "reward " + std::to_string(reward_ok) + "/" + std::to_string(reward_checks) + " (worst rel " +
                 fmt(worst_reward, 6) + "), nu " + std::to_string(nu_ok) + "/" + std::to_string(nu_checks) +
                 " (worst rel " + fmt(worst_nu, 6) + "), " + fmt(elapsed, 1) + " s");
}

// ---- 6: gradient --------------------------------------------------------------

void criterion_gradient(Outcome& out) {
  const auto start = Clock::now();
  Rng rng(14);
  int checks = 0, ok = 0;
  double worst = 0.0;
  for (int instance = 0; instance < 10; ++instance) {
    const Matrix x = icb::test::random_matrix(5, 2, rng);
    std::vector<RewardChain> samples;
    for (int i = 0; i < 3; ++i) samples.push_back(icb::test::random_chain(5, 2, rng));
    const Model1Params p{icb::test::random_vector(2, rng), icb::test::random_vector(2, rng),
                         icb::test::random_vector(2, rng, -0.7, 0.7)};
    const double c = instance % 2 == 0 ? 1.0 : 16.0;
    const Vector grad = q_bar_and_gradient(samples, p, x, 0.25, c).gradient;
    const Vector flat = p.flat();
    const double h = 1e-5;
    for (Eigen::Index i = 0; i < flat.size(); ++i) {
      Vector up = flat, down = flat;
      up(i) += h;
      down(i) -= h;
      const double fd = (q_bar(samples, Model1Params::from_flat(up), x, 0.25, c) -
                         q_bar(samples, Model1Params::from_flat(down), x, 0.25, c)) /
                        (2.0 * h);
      ++checks;
      ok += close_relative(grad(i), fd, 1e-4, 1e-3);
      worst = std::max(worst, std::abs(grad(i) - fd) / (std::abs(fd) + 1e-3));
    }
  }
  const double elapsed = seconds_since(start);
  out.report(6, ok == checks && elapsed < 60.0, "objective gradient vs central differences",
             std::to_string(ok) + "/" + std::to_string(checks) + " coordinates, worst rel " + fmt(worst * 1e6, 3) +
                 "e-6, " + fmt(elapsed, 2) + " s");
}

// ---- 7: posterior algebra -----------------------------------------------------

void criterion_posterior(Outcome& out) {
  const auto start = Clock::now();
  Rng rng(21);
  double worst = 0.0;
  for (auto rule : {MeanUpdateRule::AsWritten, MeanUpdateRule::StandardBayes}) {
    for (int trial = 0; trial < 100; ++trial) {
      const Eigen::Index k = 1 + trial % 8;
      const Eigen::Index horizon = 1 + (trial * 7) % 100;
      const GaussianBelief b1{icb::test::random_vector(k, rng), icb::test::random_spd(k, rng)};
      const Matrix x = icb::test::random_matrix(horizon, k, rng);
      const Vector r = icb::test::random_vector(horizon, rng);
      const auto traj = belief_trajectory(b1, x, r, 0.25, rule);
      for (Eigen::Index t = 1; t <= horizon; ++t) {
        const auto batch = icb::test::batch_posterior(b1, x.topRows(t), r.head(t), 0.25, rule);
        const auto& rec = traj[static_cast<std::size_t>(t)];
        worst = std::max({worst, (rec.mean - batch.mean).cwiseAbs().maxCoeff(),
                          (rec.covariance - batch.covariance).cwiseAbs().maxCoeff()});
      }
    }
  }
  const double elapsed = seconds_since(start);
  out.report(7, worst <= 1e-8 && elapsed < 10.0, "recursive vs batch posterior",
             "200 instances, max abs diff " + fmt(worst * 1e12, 3) + "e-12, " + fmt(elapsed, 2) + " s");
}

// ---- 8: chain sanity ----------------------------------------------------------

void criterion_chains(Outcome& out) {
  std::string detail;
  bool ok = true;
  {
    Rng rng(11);
    const Dataset data = icb::test::random_dataset(3, 1, rng);
    Model1Config config;
    config.alpha = 0.0;
    config.chain_length = 10000;
    const Model1Params params{Vector::Constant(1, 0.4), Vector::Zero(1), Vector::Zero(1)};
    const auto samples = e_step(params, data, config, rng);
    const Matrix x = data.chosen_features();
    const Eigen::Index last = 2;
    std::vector<double> r, sq;
    const double mean = 0.4 * x(last, 0);
    for (const auto& s : samples) {
      r.push_back(s.rewards(last));
      sq.push_back((s.rewards(last) - mean) * (s.rewards(last) - mean));
    }
    const double z_mean = (summarize(r).mean - mean) / icb::test::batch_standard_error(r);
    const double z_var = (summarize(sq).mean - 0.0625) / icb::test::batch_standard_error(sq);
    ok &= std::abs(z_mean) < 3.0 && std::abs(z_var) < 3.0;
    detail += "model1 r_T mean z=" + fmt(z_mean, 2) + ", variance z=" + fmt(z_var, 2);
  }
  {
    Rng rng(5);
    const Dataset data = icb::test::random_dataset(5, 2, rng);
    Model2Config config;
    config.sigma_p = Matrix::Identity(2, 2);
    config.sigma_b = (Vector(2) << 1.0, 0.25).finished().asDiagonal();
    config.alpha = 0.0;
    config.burn_in = 1000;
    config.num_samples = 10000;
    config.seed = 3;
    const auto est = run_icb_model2(data, config);
    double worst = 0.0;
    for (Eigen::Index j = 0; j < 2; ++j)
      for (Eigen::Index t = 0; t < 5; ++t) {
        const double expected = static_cast<double>(t + 1) * config.sigma_b(j, j);
        worst = std::max(worst, std::abs(est.belief_sd(t, j) * est.belief_sd(t, j) - expected) / expected);
      }
    ok &= worst < 0.10;
    detail += "; model2 prior variance growth worst rel dev " + fmt(worst, 3) + " (< 0.10)";
  }
  out.report(8, ok, "chain sanity without data", detail);
}

// ---- 9: CLI determinism -------------------------------------------------------

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(ICB_CLI_PATH) + " " + args + " >> '" + log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string arg(const fs::path& p) { return "'" + p.string() + "'"; }

void criterion_determinism(Outcome& out) {
  const auto root = icb::test::scratch_dir("acceptance_determinism");
  const fs::path a = root / "a", b = root / "b", log = root / "log.txt";
  fs::create_directories(a / "metrics");
  fs::create_directories(b / "metrics");
  icb::test::write_file(root / "cfg.json", R"({"scale":"desk","seed":3,"agent":{"kind":"sampling"}})");
  const std::vector<std::pair<std::string, std::string>> algorithms{
      {"baseline", "--algorithm baseline"},       {"irl", "--algorithm irl"},
      {"fold10", "--algorithm mfold-irl --folds 10"}, {"trex", "--algorithm trex"},
      {"model1", "--algorithm icb-model1"},       {"model2", "--algorithm icb-model2"}};

  int failures = 0;
  auto must = [&](const std::string& args) {
    if (run_cli(args, log) != 0) ++failures;
  };
  // First pass from the hand-written config.
  must("simulate --config " + arg(root / "cfg.json") + " --out " + arg(a / "run"));
  for (const auto& [name, flags] : algorithms) {
    must("infer --dataset " + arg(a / "run.dataset.jsonl") + " " + flags + " --out " + arg(a / (name + ".json")));
    must("evaluate --results " + arg(a / (name + ".json")) + " --truth " + arg(a / "run.truth.jsonl") + " --out " +
         arg(a / "metrics" / (name + ".json")));
  }
  must("report " + arg(a / "metrics") + " --out " + arg(a / "report"));
  // Second pass driven only by the configs embedded in the first pass's files.
  must("simulate --config " + arg(a / "run.dataset.jsonl") + " --out " + arg(b / "run"));
  for (const auto& [name, flags] : algorithms) {
    must("infer --dataset " + arg(b / "run.dataset.jsonl") + " --config " + arg(a / (name + ".json")) + " --out " +
         arg(b / (name + ".json")));
    must("evaluate --results " + arg(b / (name + ".json")) + " --truth " + arg(b / "run.truth.jsonl") + " --out " +
         arg(b / "metrics" / (name + ".json")));
  }
  must("report " + arg(b / "metrics") + " --out " + arg(b / "report"));

  int compared = 0, identical = 0;
  std::string differing;
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), a);
    ++compared;
    if (fs::exists(b / rel) && icb::test::read_file(entry.path()) == icb::test::read_file(b / rel)) ++identical;
    else differing += " " + rel.string();
  }
  const bool ok = failures == 0 && compared > 0 && identical == compared;
  out.report(9, ok, "byte-identical reruns from embedded config",
             std::to_string(identical) + "/" + std::to_string(compared) + " files identical, " +
                 std::to_string(failures) + " command failures" + (differing.empty() ? "" : ";" + differing));
}

}  // namespace

int main(int argc, char** argv) {
  Scale scale = Scale::Full;
  std::uint64_t seed = 1;
  int repetitions = 5;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--scale" && i + 1 < argc) scale = parse_scale(argv[++i]);
    else if (a == "--seed" && i + 1 < argc) seed = std::stoull(argv[++i]);
    else if (a == "--repetitions" && i + 1 < argc) repetitions = std::stoi(argv[++i]);
    else {
      std::cerr << "usage: icb_acceptance [--scale full|desk] [--seed N] [--repetitions N]\n";
      return 2;
    }
  }

  Outcome out;
  criterion_baseline_cells(out);
  const Table table = run_comparison(scale, seed, repetitions);
  criterion_belief_error(out, table, scale);
  criterion_true_reward(out, table);
  criterion_variation(out, table);
  criterion_oracles(out);
  criterion_gradient(out);
  criterion_posterior(out);
  criterion_chains(out);
  criterion_determinism(out);
  informational_standard_bayes(scale, seed, repetitions);
  std::cout << (out.failures == 0 ? "all criteria passed" : std::to_string(out.failures) + " criteria failed")
            << std::endl;
  return out.failures == 0 ? 0 : 1;
}
