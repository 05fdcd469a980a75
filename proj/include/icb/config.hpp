#pragma once

// Experiment configuration documents. Every default is the reference
// experiment setting; `Scale::Desk` shrinks the horizon and the Model-1
// chain/EM budget for quick runs.

#include <cstdint>
#include <optional>
#include <string>

#include "icb/agents.hpp"
#include "icb/baselines.hpp"
#include "icb/environment.hpp"
#include "icb/io.hpp"
#include "icb/model1.hpp"
#include "icb/model2.hpp"

namespace icb {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Scale { Full, Desk };

inline Scale parse_scale(const std::string& s) {
  if (s == "full") return Scale::Full;
  if (s == "desk") return Scale::Desk;
  throw ConfigError("unknown scale '" + s + "' (expected full or desk)");
}
inline std::string to_string(Scale s) { return s == Scale::Full ? "full" : "desk"; }

struct ScaleProfile {
  Eigen::Index horizon;
  int chain_length;
  int em_iterations;
};

inline ScaleProfile profile(Scale s) {
  return s == Scale::Full ? ScaleProfile{250, 1000, 100} : ScaleProfile{100, 200, 20};
}

/// splitmix64 finalizer over (seed, stream): independent child seeds.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace seed_stream {
inline constexpr std::uint64_t environment = 1;
inline constexpr std::uint64_t agent = 2;
inline constexpr std::uint64_t algorithm = 3;
inline constexpr std::uint64_t repetition = 1000;
}  // namespace seed_stream

enum class Algorithm { Model1, Model2, Irl, MFoldIrl, Trex, Baseline };

inline Algorithm parse_algorithm(const std::string& s) {
  if (s == "icb-model1") return Algorithm::Model1;
  if (s == "icb-model2") return Algorithm::Model2;
  if (s == "irl") return Algorithm::Irl;
  if (s == "mfold-irl") return Algorithm::MFoldIrl;
  if (s == "trex") return Algorithm::Trex;
  if (s == "baseline") return Algorithm::Baseline;
  throw ConfigError("unknown algorithm '" + s +
                    "' (expected icb-model1, icb-model2, irl, mfold-irl, trex or baseline)");
}

inline std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Model1: return "icb-model1";
    case Algorithm::Model2: return "icb-model2";
    case Algorithm::Irl: return "irl";
    case Algorithm::MFoldIrl: return "mfold-irl";
    case Algorithm::Trex: return "trex";
    case Algorithm::Baseline: return "baseline";
  }
  return "unknown";
}

/// A covariance given either as a scalar multiple of the identity or in full.
struct CovarianceSpec {
  std::optional<double> scale;
  std::optional<Matrix> full;

  Matrix resolve(Eigen::Index k) const {
    if (full) {
      if (full->rows() != k || full->cols() != k) throw ConfigError("covariance must be k x k");
      return *full;
    }
    return scale.value_or(1.0) * Matrix::Identity(k, k);
  }

  Json to_json() const { return full ? icb::to_json(*full) : Json(scale.value_or(1.0)); }

  static CovarianceSpec from_json(const Json& j, const char* what) {
    CovarianceSpec c;
    if (j.is_number()) {
      c.scale = j.get<double>();
      if (!(*c.scale > 0.0)) throw ConfigError(std::string(what) + " must be > 0");
    } else {
      try {
        c.full = matrix_from_json(j, what);
      } catch (const FormatError& e) {
        throw ConfigError(e.what());
      }
    }
    return c;
  }
};

struct AlgorithmConfig {
  Algorithm name = Algorithm::Baseline;
  Model1Config model1;
  Model2Config model2;  // covariances come from the specs below
  CovarianceSpec sigma_p{std::pow(0.05 * 0.90, 2), std::nullopt};
  CovarianceSpec sigma_b{std::pow(0.05 * 0.10, 2), std::nullopt};
  IrlConfig irl;
  std::optional<Eigen::Index> folds;  // nullopt: one fold per step (T-fold)
  TrexConfig trex;

  /// Row label used in reports ("10-fold-irl", "T-fold-irl", ...).
  std::string label() const {
    if (name != Algorithm::MFoldIrl) return to_string(name);
    return folds ? std::to_string(*folds) + "-fold-irl" : "T-fold-irl";
  }
};

struct ExperimentConfig {
  SyntheticEnvConfig environment;
  std::optional<std::uint64_t> environment_seed;  // explicit override
  AgentSpec agent;
  std::optional<AlgorithmConfig> algorithm;
  std::vector<AlgorithmConfig> columns;  // sweep columns; empty means the default seven
  int repetitions = 1;
  std::uint64_t seed = 0;
  Scale scale = Scale::Full;

  std::uint64_t env_seed() const {
    return environment_seed.value_or(derive_seed(seed, seed_stream::environment));
  }
  std::uint64_t agent_seed() const { return derive_seed(seed, seed_stream::agent); }
  std::uint64_t algorithm_seed() const { return derive_seed(seed, seed_stream::algorithm); }
};

namespace detail {

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  try {
    return j[key].get<T>();
  } catch (const Json::exception&) {
    throw ConfigError(std::string("config field '") + key + "' has the wrong type");
  }
}

inline void reject_unknown(const Json& j, std::initializer_list<const char*> known, const char* section) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigError(std::string("unknown field '") + key + "' in " + section + " section");
  }
}

}  // namespace detail

inline AlgorithmConfig parse_algorithm_config(const Json& j, Scale scale) {
  if (!j.is_object()) throw ConfigError("algorithm section must be an object");
  using detail::get_or;
  AlgorithmConfig a;
  a.name = parse_algorithm(get_or<std::string>(j, "name", "baseline"));
  const ScaleProfile prof = profile(scale);
  switch (a.name) {
    case Algorithm::Model1: {
      detail::reject_unknown(j, {"name", "sigma", "alpha", "N", "burn_in", "thin", "em_iterations", "learning_rate",
                                 "rms_discount", "init", "literal_mu_bar", "standard_bayes_mean_update"},
                             "algorithm");
      auto& m = a.model1;
      m.sigma = get_or(j, "sigma", m.sigma);
      m.alpha = get_or(j, "alpha", m.alpha);
      m.chain_length = get_or(j, "N", prof.chain_length);
      m.burn_in = get_or(j, "burn_in", m.burn_in);
      m.thin = get_or(j, "thin", m.thin);
      m.em_iterations = get_or(j, "em_iterations", prof.em_iterations);
      m.learning_rate = get_or(j, "learning_rate", m.learning_rate);
      m.rms_discount = get_or(j, "rms_discount", m.rms_discount);
      const auto init = get_or<std::string>(j, "init", "sample");
      if (init != "sample" && init != "mean") throw ConfigError("init must be 'sample' or 'mean'");
      m.sample_initial_estimates = init == "sample";
      m.literal_mu_bar = get_or(j, "literal_mu_bar", false);
      m.update_rule = get_or(j, "standard_bayes_mean_update", false) ? MeanUpdateRule::StandardBayes
                                                                     : MeanUpdateRule::AsWritten;
      m.validate();
      break;
    }
    case Algorithm::Model2: {
      detail::reject_unknown(j, {"name", "sigma_p", "sigma_b", "alpha", "burn_in", "num_samples"}, "algorithm");
      if (j.contains("sigma_p")) a.sigma_p = CovarianceSpec::from_json(j["sigma_p"], "sigma_p");
      if (j.contains("sigma_b")) a.sigma_b = CovarianceSpec::from_json(j["sigma_b"], "sigma_b");
      a.model2.alpha = get_or(j, "alpha", a.model2.alpha);
      a.model2.burn_in = get_or(j, "burn_in", a.model2.burn_in);
      a.model2.num_samples = get_or(j, "num_samples", a.model2.num_samples);
      if (a.model2.burn_in < 0 || a.model2.num_samples < 1) throw ConfigError("burn_in must be >= 0 and num_samples >= 1");
      break;
    }
    case Algorithm::Irl:
    case Algorithm::MFoldIrl: {
      detail::reject_unknown(j, {"name", "alpha", "mh_iterations", "burn_in", "thin", "proposal_std", "folds"},
                             "algorithm");
      auto& c = a.irl;
      c.alpha = get_or(j, "alpha", c.alpha);
      c.mh_iterations = get_or(j, "mh_iterations", c.mh_iterations);
      c.burn_in = get_or(j, "burn_in", c.burn_in);
      c.thin = get_or(j, "thin", c.thin);
      c.proposal_std = get_or(j, "proposal_std", c.proposal_std);
      c.validate();
      if (a.name == Algorithm::MFoldIrl) {
        if (!j.contains("folds")) throw ConfigError("mfold-irl requires 'folds' (an integer or \"T\")");
        if (j["folds"].is_string()) {
          if (j["folds"].get<std::string>() != "T") throw ConfigError("folds must be an integer or \"T\"");
        } else {
          a.folds = get_or<Eigen::Index>(j, "folds", 1);
          if (*a.folds < 1) throw ConfigError("folds must be >= 1");
        }
      } else if (j.contains("folds")) {
        throw ConfigError("'folds' only applies to mfold-irl");
      }
      break;
    }
    case Algorithm::Trex: {
      detail::reject_unknown(j, {"name", "learning_rate", "beta1", "beta2", "patience", "max_iterations", "max_pairs"},
                             "algorithm");
      auto& c = a.trex;
      c.learning_rate = get_or(j, "learning_rate", c.learning_rate);
      c.beta1 = get_or(j, "beta1", c.beta1);
      c.beta2 = get_or(j, "beta2", c.beta2);
      c.patience = get_or(j, "patience", c.patience);
      c.max_iterations = get_or(j, "max_iterations", c.max_iterations);
      c.max_pairs = get_or<std::size_t>(j, "max_pairs", c.max_pairs);
      c.validate();
      break;
    }
    case Algorithm::Baseline:
      detail::reject_unknown(j, {"name"}, "algorithm");
      break;
  }
  return a;
}

inline Json algorithm_to_json(const AlgorithmConfig& a) {
  Json j;
  j["name"] = to_string(a.name);
  switch (a.name) {
    case Algorithm::Model1: {
      const auto& m = a.model1;
      j["sigma"] = m.sigma;
      j["alpha"] = m.alpha;
      j["N"] = m.chain_length;
      j["burn_in"] = m.burn_in;
      j["thin"] = m.thin;
      j["em_iterations"] = m.em_iterations;
      j["learning_rate"] = m.learning_rate;
      j["rms_discount"] = m.rms_discount;
      j["init"] = m.sample_initial_estimates ? "sample" : "mean";
      j["literal_mu_bar"] = m.literal_mu_bar;
      j["standard_bayes_mean_update"] = m.update_rule == MeanUpdateRule::StandardBayes;
      break;
    }
    case Algorithm::Model2:
      j["sigma_p"] = a.sigma_p.to_json();
      j["sigma_b"] = a.sigma_b.to_json();
      j["alpha"] = a.model2.alpha;
      j["burn_in"] = a.model2.burn_in;
      j["num_samples"] = a.model2.num_samples;
      break;
    case Algorithm::Irl:
    case Algorithm::MFoldIrl:
      j["alpha"] = a.irl.alpha;
      j["mh_iterations"] = a.irl.mh_iterations;
      j["burn_in"] = a.irl.burn_in;
      j["thin"] = a.irl.thin;
      j["proposal_std"] = a.irl.proposal_std;
      if (a.name == Algorithm::MFoldIrl) j["folds"] = a.folds ? Json(*a.folds) : Json("T");
      break;
    case Algorithm::Trex:
      j["learning_rate"] = a.trex.learning_rate;
      j["beta1"] = a.trex.beta1;
      j["beta2"] = a.trex.beta2;
      j["patience"] = a.trex.patience;
      j["max_iterations"] = a.trex.max_iterations;
      j["max_pairs"] = a.trex.max_pairs;
      break;
    case Algorithm::Baseline:
      break;
  }
  return j;
}

inline SyntheticEnvConfig parse_environment(const Json& j, Scale scale, std::optional<std::uint64_t>& seed_out) {
  using detail::get_or;
  detail::reject_unknown(j, {"T", "arms_per_step", "preset", "features", "seed"}, "environment");
  SyntheticEnvConfig env;
  env.horizon = get_or<Eigen::Index>(j, "T", profile(scale).horizon);
  env.arms_per_step = get_or<Eigen::Index>(j, "arms_per_step", 3);
  if (j.contains("features")) {
    if (j.contains("preset")) throw ConfigError("give either 'preset' or 'features', not both");
    if (!j["features"].is_array() || j["features"].empty()) throw ConfigError("features must be a non-empty array");
    env.features.clear();
    for (const auto& f : j["features"]) {
      detail::reject_unknown(f, {"name", "dist", "p", "lo", "hi"}, "feature");
      FeatureGenerator g;
      g.name = get_or<std::string>(f, "name", "x" + std::to_string(env.features.size() + 1));
      try {
        g.kind = FeatureGenerator::parse_kind(get_or<std::string>(f, "dist", "uniform"));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
      g.p = get_or(f, "p", 0.5);
      g.lo = get_or(f, "lo", 0.0);
      g.hi = get_or(f, "hi", 1.0);
      env.features.push_back(g);
    }
  } else {
    const auto preset = get_or<std::string>(j, "preset", "k2");
    if (preset == "k2") env.features = two_feature_preset();
    else if (preset == "k8") env.features = eight_feature_preset();
    else throw ConfigError("unknown environment preset '" + preset + "' (expected k2 or k8)");
  }
  if (j.contains("seed")) seed_out = get_or<std::uint64_t>(j, "seed", 0);
  try {
    env.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return env;
}

inline Json environment_to_json(const SyntheticEnvConfig& env, const std::optional<std::uint64_t>& seed) {
  Json j;
  j["T"] = env.horizon;
  j["arms_per_step"] = env.arms_per_step;
  Json feats = Json::array();
  for (const auto& f : env.features) {
    Json fj;
    fj["name"] = f.name;
    fj["dist"] = f.kind_tag();
    if (f.kind == FeatureGenerator::Kind::Bernoulli) {
      fj["p"] = f.p;
    } else {
      fj["lo"] = f.lo;
      fj["hi"] = f.hi;
    }
    feats.push_back(fj);
  }
  j["features"] = feats;
  if (seed) j["seed"] = *seed;
  return j;
}

inline AgentSpec parse_agent(const Json& j, const SyntheticEnvConfig& env) {
  using detail::get_or;
  detail::reject_unknown(j, {"kind", "rho_star", "alpha", "sigma", "t_star", "gamma", "initial_belief",
                             "standard_bayes_mean_update"},
                         "agent");
  if (!j.contains("kind")) throw ConfigError("agent section requires 'kind'");
  AgentSpec a;
  try {
    a.kind = parse_agent_kind(j["kind"].get<std::string>());
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  const Eigen::Index k = env.dim();
  if (j.contains("rho_star")) {
    try {
      a.rho_star = vector_from_json(j["rho_star"], "rho_star");
    } catch (const FormatError& e) {
      throw ConfigError(e.what());
    }
  } else if (k != 2) {
    throw ConfigError("agent.rho_star is required when k != 2");
  }
  if (a.rho_star.size() != k) throw ConfigError("agent.rho_star length does not match the number of features");
  a.alpha = get_or(j, "alpha", a.alpha);
  a.sigma = get_or(j, "sigma", a.sigma);
  if (j.contains("t_star")) a.t_star = get_or<Eigen::Index>(j, "t_star", 0);
  if (a.kind == AgentKind::Regressing) a.gamma = get_or(j, "gamma", 0.0);
  else if (j.contains("gamma")) throw ConfigError("'gamma' only applies to regressing agents");
  if (a.kind == AgentKind::Sampling) {
    if (j.contains("initial_belief")) {
      const Json& b = j["initial_belief"];
      try {
        a.initial_belief = GaussianBelief{vector_from_json(b.at("mean"), "initial_belief.mean"),
                                          matrix_from_json(b.at("covariance"), "initial_belief.covariance")};
      } catch (const std::exception& e) {
        throw ConfigError(std::string("initial_belief: ") + e.what());
      }
    } else {
      a.initial_belief = GaussianBelief::standard(k);
    }
  }
  a.update_rule = get_or(j, "standard_bayes_mean_update", false) ? MeanUpdateRule::StandardBayes
                                                                 : MeanUpdateRule::AsWritten;
  try {
    a.validate(env.horizon);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("agent: ") + e.what());
  } catch (const NumericalError& e) {
    throw ConfigError(std::string("agent: ") + e.what());
  }
  return a;
}

inline Json agent_to_json(const AgentSpec& a) {
  Json j;
  j["kind"] = to_string(a.kind);
  j["rho_star"] = to_json(a.rho_star);
  j["alpha"] = a.alpha;
  j["sigma"] = a.sigma;
  if (a.t_star) j["t_star"] = *a.t_star;
  if (a.gamma) j["gamma"] = *a.gamma;
  if (a.initial_belief)
    j["initial_belief"] = {{"mean", to_json(a.initial_belief->mean)},
                           {"covariance", to_json(a.initial_belief->covariance)}};
  j["standard_bayes_mean_update"] = a.update_rule == MeanUpdateRule::StandardBayes;
  return j;
}

/// Parses a configuration document. Artifact files are accepted too: their
/// embedded "config" object (and "seed") are used, so any output can be
/// regenerated from itself.
inline ExperimentConfig parse_experiment_config(const Json& doc, std::optional<Scale> scale_override = {},
                                                bool require_agent = true) {
  Json j = doc;
  if (j.contains("config") && j["config"].is_object()) {
    Json inner = j["config"];
    if (j.contains("seed") && !inner.contains("seed")) inner["seed"] = j["seed"];
    j = inner;
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  using detail::get_or;
  detail::reject_unknown(j, {"environment", "agent", "algorithm", "algorithms", "repetitions", "seed", "scale"}, "top-level");
  ExperimentConfig cfg;
  cfg.scale = scale_override.value_or(parse_scale(get_or<std::string>(j, "scale", "full")));
  cfg.seed = get_or<std::uint64_t>(j, "seed", 0);
  cfg.repetitions = get_or(j, "repetitions", 1);
  if (cfg.repetitions < 1) throw ConfigError("repetitions must be >= 1");
  cfg.environment = parse_environment(j.value("environment", Json::object()), cfg.scale, cfg.environment_seed);
  if (j.contains("agent")) cfg.agent = parse_agent(j["agent"], cfg.environment);
  else if (require_agent) throw ConfigError("config requires an 'agent' section");
  if (j.contains("algorithm")) cfg.algorithm = parse_algorithm_config(j["algorithm"], cfg.scale);
  if (j.contains("algorithms")) {
    if (!j["algorithms"].is_array() || j["algorithms"].empty())
      throw ConfigError("'algorithms' must be a non-empty array of algorithm sections");
    for (const auto& a : j["algorithms"]) cfg.columns.push_back(parse_algorithm_config(a, cfg.scale));
  }
  return cfg;
}

inline Json experiment_to_json(const ExperimentConfig& cfg, bool include_agent = true) {
  Json j;
  j["scale"] = to_string(cfg.scale);
  j["seed"] = cfg.seed;
  j["repetitions"] = cfg.repetitions;
  j["environment"] = environment_to_json(cfg.environment, cfg.environment_seed);
  if (include_agent) j["agent"] = agent_to_json(cfg.agent);
  if (cfg.algorithm) j["algorithm"] = algorithm_to_json(*cfg.algorithm);
  if (!cfg.columns.empty()) {
    Json cols = Json::array();
    for (const auto& a : cfg.columns) cols.push_back(algorithm_to_json(a));
    j["algorithms"] = cols;
  }
  return j;
}

}  // namespace icb
