#include <gtest/gtest.h>

#include "support.hpp"

using namespace icb;

namespace {

ExperimentConfig small_config(AgentKind kind, Eigen::Index horizon = 40, std::uint64_t seed = 5) {
  ExperimentConfig cfg;
  cfg.environment.horizon = horizon;
  cfg.agent = AgentSpec::with_defaults(kind, horizon);
  cfg.seed = seed;
  return cfg;
}

std::string dataset_text(const Dataset& d, const Json& provenance = Json::object()) {
  std::ostringstream out;
  write_dataset(out, d, provenance);
  return out.str();
}

std::size_t format_error_line(const std::string& text) {
  std::istringstream in(text);
  try {
    read_dataset(in);
  } catch (const FormatError& e) {
    return e.line();
  }
  ADD_FAILURE() << "no FormatError raised";
  return 0;
}

}  // namespace

TEST(DatasetIo, RoundTripIsExact) {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const Dataset d = icb::test::random_dataset(1 + trial * 7, 1 + trial % 5, rng, 2 + trial % 4);
    std::istringstream in(dataset_text(d, Json{{"seed", trial}}));
    const LoadedDataset back = read_dataset(in);
    EXPECT_EQ(back.dataset, d);
    EXPECT_EQ(back.header["seed"], trial);
  }
}

TEST(DatasetIo, FileRoundTripPreservesProvenance) {
  const auto cfg = small_config(AgentKind::Sampling);
  const auto sim = run_simulation(cfg);
  const auto dir = icb::test::scratch_dir("io_dataset");
  const std::string path = (dir / "d.jsonl").string();
  save_dataset(path, sim.dataset, sim.provenance);
  const LoadedDataset back = load_dataset(path);
  EXPECT_EQ(back.dataset, sim.dataset);
  EXPECT_EQ(back.header["config"], sim.provenance["config"]);
  EXPECT_THROW(load_dataset((dir / "missing.jsonl").string()), IoError);
}

TEST(DatasetIo, ChosenOutOfRangeReportsLine) {
  Rng rng(2);
  const Dataset d = icb::test::random_dataset(5, 2, rng, 3);
  std::string text = dataset_text(d);
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  Json row = Json::parse(lines[3]);
  row["chosen"] = 3;
  lines[3] = row.dump();
  std::string broken;
  for (const auto& l : lines) broken += l + "\n";
  EXPECT_EQ(format_error_line(broken), 4u);

  row["chosen"] = -1;
  lines[3] = row.dump();
  broken.clear();
  for (const auto& l : lines) broken += l + "\n";
  EXPECT_EQ(format_error_line(broken), 4u);
}

TEST(DatasetIo, InconsistentDimensionReportsLine) {
  Rng rng(3);
  const Dataset d = icb::test::random_dataset(4, 2, rng, 3);
  std::string text = dataset_text(d);
  const auto pos = text.find("\n{\"t\":3");
  ASSERT_NE(pos, std::string::npos);
  const auto end = text.find('\n', pos + 1);
  text.replace(pos + 1, end - pos - 1, R"({"t":3,"arms":[[0.1,0.2,0.3],[0.4,0.5,0.6]],"chosen":0})");
  EXPECT_EQ(format_error_line(text), 4u);
}

TEST(DatasetIo, OtherSchemaViolations) {
  Rng rng(4);
  const Dataset d = icb::test::random_dataset(3, 2, rng, 2);
  const std::string good = dataset_text(d);
  auto replace = [&](const std::string& from, const std::string& to) {
    std::string s = good;
    const auto pos = s.find(from);
    EXPECT_NE(pos, std::string::npos) << from;
    s.replace(pos, from.size(), to);
    return s;
  };
  EXPECT_EQ(format_error_line(replace("\"version\":1", "\"version\":2")), 1u);
  EXPECT_EQ(format_error_line(replace("{\"t\":2", "{\"t\":5")), 3u);
  EXPECT_EQ(format_error_line(replace("{\"t\":2", "{\"t\":2 oops")), 3u);
  EXPECT_EQ(format_error_line(replace("\"T\":3", "\"T\":4")), 0u);
  EXPECT_EQ(format_error_line(""), 1u);
}

TEST(GroundTruthIo, RoundTripIsExact) {
  for (auto kind : {AgentKind::Stationary, AgentKind::Sampling, AgentKind::Stepping, AgentKind::Regressing}) {
    const auto sim = run_simulation(small_config(kind));
    std::ostringstream out;
    write_ground_truth(out, sim.truth, sim.provenance);
    std::istringstream in(out.str());
    const GroundTruth back = read_ground_truth(in);
    EXPECT_EQ(back, sim.truth);
    EXPECT_EQ(back.header["seed"], 5);
  }
}

TEST(GroundTruthIo, RejectsDatasetFile) {
  Rng rng(5);
  std::istringstream in(dataset_text(icb::test::random_dataset(3, 2, rng)));
  EXPECT_THROW(read_ground_truth(in), FormatError);
}

TEST(ResultsIo, RoundTripIsExact) {
  Rng rng(6);
  Results r;
  r.algorithm = "icb-model1";
  r.horizon = 7;
  r.dim = 3;
  r.feature_names = {"a", "b", "c"};
  r.rho_star = icb::test::random_vector(3, rng);
  r.beta1 = GaussianBelief{icb::test::random_vector(3, rng), icb::test::random_spd(3, rng)};
  r.belief_means = icb::test::random_matrix(7, 3, rng, -1.0, 1.0);
  r.belief_sd = icb::test::random_matrix(7, 3, rng);
  r.objective_trace = {1.0 / 3.0, -2.5e-17, 1e300};
  r.diagnostics = Json{{"x", 1}};
  r.config = experiment_to_json(small_config(AgentKind::Stepping));
  r.seed = 18446744073709551615ull;

  const auto dir = icb::test::scratch_dir("io_results");
  const std::string path = (dir / "r.json").string();
  save_results(path, r);
  EXPECT_EQ(load_results(path), r);

  Results sparse;
  sparse.algorithm = "trex";
  sparse.horizon = 2;
  sparse.dim = 1;
  sparse.feature_names = {"x"};
  EXPECT_EQ(results_from_json(results_to_json(sparse)), sparse);

  Json bad = results_to_json(r);
  bad["version"] = 9;
  EXPECT_THROW(results_from_json(bad), FormatError);
  icb::test::write_file(dir / "broken.json", "{\"version\":");
  EXPECT_THROW(load_results((dir / "broken.json").string()), FormatError);
  bad = results_to_json(r);
  bad.erase("estimates");
  icb::test::write_file(dir / "missing.json", bad.dump());
  EXPECT_THROW(load_results((dir / "missing.json").string()), FormatError);
}

TEST(ResultsIo, EmbedsConfigAndSeed) {
  const auto cfg = small_config(AgentKind::Regressing);
  const auto sim = run_simulation(cfg);
  AlgorithmConfig algo;
  algo.name = Algorithm::Baseline;
  const Results r = run_algorithm(sim.dataset, algo, cfg.algorithm_seed(), experiment_to_json(cfg), cfg.seed);
  const Json j = results_to_json(r);
  EXPECT_EQ(j["seed"], 5);
  const ExperimentConfig again = parse_experiment_config(j);
  EXPECT_EQ(experiment_to_json(again), experiment_to_json(cfg));
  EXPECT_EQ(again.seed, cfg.seed);
}

TEST(MetricsIo, RoundTripKeepsUndefinedRows) {
  MetricsRecord m;
  m.agent = "sampling";
  m.algorithm = "10-fold-irl";
  m.seed = 3;
  m.feature_names = {"a", "b"};
  m.belief_error = ErrorSeries::from_values({0.1, 0.2, 0.35});
  m.true_reward_error = 0.123456789012345;
  Matrix imp(3, 2);
  imp << 0.5, 0.5, std::nan(""), std::nan(""), 0.25, 0.75;
  m.importance = imp;

  const MetricsRecord back = metrics_from_json(metrics_to_json(m));
  EXPECT_EQ(back.agent, m.agent);
  EXPECT_EQ(back.algorithm, m.algorithm);
  EXPECT_EQ(back.seed, m.seed);
  EXPECT_EQ(back.feature_names, m.feature_names);
  EXPECT_EQ(back.belief_error->per_time, m.belief_error->per_time);
  EXPECT_EQ(back.belief_error->mean, m.belief_error->mean);
  EXPECT_EQ(back.belief_error->variation, m.belief_error->variation);
  EXPECT_EQ(*back.true_reward_error, *m.true_reward_error);
  EXPECT_TRUE(back.importance->row(1).array().isNaN().all());
  EXPECT_EQ(back.importance->row(0), imp.row(0));
  EXPECT_EQ(back.importance->row(2), imp.row(2));

  MetricsRecord empty;
  empty.agent = "stationary";
  empty.algorithm = "trex";
  const MetricsRecord e2 = metrics_from_json(metrics_to_json(empty));
  EXPECT_FALSE(e2.belief_error.has_value());
  EXPECT_FALSE(e2.importance.has_value());
  EXPECT_FALSE(e2.true_reward_error.has_value());
}

TEST(Serialization, DeterministicBytes) {
  const auto cfg = small_config(AgentKind::Sampling, 30, 11);
  const auto a = run_simulation(cfg);
  const auto b = run_simulation(cfg);
  std::ostringstream ta, tb;
  write_ground_truth(ta, a.truth, a.provenance);
  write_ground_truth(tb, b.truth, b.provenance);
  EXPECT_EQ(ta.str(), tb.str());
  EXPECT_EQ(dataset_text(a.dataset, a.provenance), dataset_text(b.dataset, b.provenance));
  EXPECT_THROW(to_json((Vector(1) << std::nan("")).finished()), NumericalError);
}

TEST(Config, RoundTripIsAFixedPoint) {
  const std::vector<std::string> docs = {
      R"({"agent":{"kind":"stationary"}})",
      R"({"seed":9,"environment":{"T":60,"preset":"k2","seed":4},
          "agent":{"kind":"stepping","t_star":20},
          "algorithm":{"name":"icb-model1","N":30,"em_iterations":5}})",
      R"({"scale":"desk","agent":{"kind":"regressing","t_star":100,"gamma":0.3},
          "algorithm":{"name":"mfold-irl","folds":"T"}})",
      R"({"environment":{"preset":"k8"},
          "agent":{"kind":"sampling","rho_star":[1,0,0,0,0,0,0,-1],"standard_bayes_mean_update":true},
          "algorithm":{"name":"icb-model2","sigma_b":0.0004}})",
      R"({"environment":{"features":[{"name":"u","dist":"uniform","lo":-1,"hi":1},{"name":"b","dist":"bernoulli","p":0.3}]},
          "agent":{"kind":"stationary","rho_star":[0.5,-0.5]},
          "algorithms":[{"name":"trex","patience":50},{"name":"irl","proposal_std":0.02},{"name":"baseline"}]})",
  };
  for (const auto& text : docs) {
    const ExperimentConfig first = parse_experiment_config(Json::parse(text));
    const Json once = experiment_to_json(first);
    const Json twice = experiment_to_json(parse_experiment_config(once));
    EXPECT_EQ(once, twice) << text;
    EXPECT_EQ(once.dump(), twice.dump()) << text;
  }
}

TEST(Config, ScaleProfiles) {
  const auto full = parse_experiment_config(Json::parse(R"({"agent":{"kind":"stationary"}})"));
  const auto desk = parse_experiment_config(Json::parse(R"({"agent":{"kind":"stationary"}})"), Scale::Desk);
  EXPECT_EQ(full.environment.horizon, 250);
  EXPECT_LT(desk.environment.horizon, full.environment.horizon);
  EXPECT_EQ(desk.scale, Scale::Desk);
}

TEST(Config, Rejections) {
  auto rejects = [](const char* text) {
    EXPECT_THROW(parse_experiment_config(Json::parse(text)), ConfigError) << text;
  };
  rejects(R"({"agent":{"kind":"stationary"},"algorithm":{"name":"gail"}})");
  rejects(R"({"agent":{"kind":"stepping"}})");
  rejects(R"({"agent":{"kind":"stepping","t_star":1000}})");
  rejects(R"({"agent":{"kind":"regressing","t_star":10,"gamma":2}})");
  rejects(R"({"agent":{"kind":"stationary","gamma":0.5}})");
  rejects(R"({"agent":{"kind":"greedy"}})");
  rejects(R"({"agent":{"kind":"stationary","rho_star":[1,2,3]}})");
  rejects(R"({"agent":{"kind":"stationary"},"colour":"red"})");
  rejects(R"({"agent":{"kind":"stationary"},"algorithm":{"name":"irl","folds":3}})");
  rejects(R"({"agent":{"kind":"stationary"},"algorithm":{"name":"mfold-irl"}})");
  rejects(R"({"agent":{"kind":"stationary"},"algorithm":{"name":"icb-model1","N":"many"}})");
  rejects(R"({"environment":{"preset":"k3"},"agent":{"kind":"stationary"}})");
  rejects(R"({"environment":{"preset":"k8"},"agent":{"kind":"stationary"}})");
  rejects(R"({"agent":{"kind":"stationary"},"repetitions":0})");
  rejects(R"({})");
  rejects(R"([1,2])");
  EXPECT_NO_THROW(parse_experiment_config(Json::object(), std::nullopt, false));
}

TEST(Config, RegressingGammaDefaultsToZero) {
  const auto cfg = parse_experiment_config(Json::parse(R"({"agent":{"kind":"regressing","t_star":125}})"));
  ASSERT_TRUE(cfg.agent.gamma.has_value());
  EXPECT_EQ(*cfg.agent.gamma, 0.0);
  EXPECT_THROW(parse_experiment_config(Json::parse(R"({"agent":{"kind":"regressing"}})")), ConfigError);
}
