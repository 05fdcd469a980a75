#pragma once

// Simulated learning agents that generate datasets with known ground truth.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "icb/bandit.hpp"
#include "icb/dataset.hpp"

namespace icb {

enum class AgentKind { Stationary, Sampling, Stepping, Regressing };

inline std::string to_string(AgentKind k) {
  switch (k) {
    case AgentKind::Stationary: return "stationary";
    case AgentKind::Sampling: return "sampling";
    case AgentKind::Stepping: return "stepping";
    case AgentKind::Regressing: return "regressing";
  }
  return "unknown";
}

inline AgentKind parse_agent_kind(const std::string& s) {
  if (s == "stationary") return AgentKind::Stationary;
  if (s == "sampling") return AgentKind::Sampling;
  if (s == "stepping") return AgentKind::Stepping;
  if (s == "regressing") return AgentKind::Regressing;
  throw std::invalid_argument("unknown agent kind '" + s + "'");
}

inline const RewardParameter& default_true_reward() {
  static const RewardParameter rho = (Vector(2) << -0.683, -0.317).finished();
  return rho;
}

/// Uniform preference vector −1/k.
inline RewardParameter uniform_preferences(Eigen::Index k) {
  return Vector::Constant(k, -1.0 / static_cast<double>(k));
}

struct AgentSpec {
  AgentKind kind = AgentKind::Stationary;
  RewardParameter rho_star = default_true_reward();
  double alpha = 25.0;
  double sigma = 0.25;  // reward noise for every kind; belief noise for Sampling
  std::optional<Eigen::Index> t_star;                 // Stepping, Regressing
  std::optional<double> gamma;                        // Regressing
  std::optional<GaussianBelief> initial_belief;       // Sampling
  MeanUpdateRule update_rule = MeanUpdateRule::AsWritten;

  Eigen::Index dim() const { return rho_star.size(); }

  /// Fills the per-kind defaults (t* = T/2, γ = 0, β_1 = N(0, I)).
  static AgentSpec with_defaults(AgentKind kind, Eigen::Index horizon,
                                 RewardParameter rho = default_true_reward()) {
    AgentSpec s;
    s.kind = kind;
    s.rho_star = std::move(rho);
    if (kind == AgentKind::Stepping || kind == AgentKind::Regressing) s.t_star = horizon / 2;
    if (kind == AgentKind::Regressing) s.gamma = 0.0;
    if (kind == AgentKind::Sampling) s.initial_belief = GaussianBelief::standard(s.dim());
    return s;
  }

  void validate(Eigen::Index horizon) const {
    if (rho_star.size() < 1 || !rho_star.allFinite()) throw std::invalid_argument("rho_star must be finite and non-empty");
    if (!std::isfinite(alpha) || alpha < 0.0) throw std::invalid_argument("alpha must be finite and >= 0");
    if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be > 0");
    if (kind == AgentKind::Stepping || kind == AgentKind::Regressing) {
      if (!t_star) throw std::invalid_argument(to_string(kind) + " agent requires t_star");
      if (*t_star < 1 || *t_star > horizon) throw std::invalid_argument("t_star must satisfy 1 <= t_star <= T");
    }
    if (kind == AgentKind::Regressing) {
      if (!gamma) throw std::invalid_argument("regressing agent requires gamma");
      if (*gamma < 0.0 || *gamma > 1.0) throw std::invalid_argument("gamma must lie in [0,1]");
    }
    if (kind == AgentKind::Sampling) {
      if (!initial_belief) throw std::invalid_argument("sampling agent requires initial_belief");
      if (initial_belief->mean.size() != dim()) throw std::invalid_argument("initial_belief dimension mismatch");
      initial_belief->validate();
    }
  }
};

/// Reward parameter the agent acts on at 1-based step t. The Sampling agent
/// draws from the belief obtained by folding its history; the others are
/// deterministic schedules.
inline RewardParameter effective_rho(const AgentSpec& spec, Eigen::Index t, Eigen::Index horizon,
                                     std::span<const Observation> history, Rng& rng) {
  if (t < 1 || t > horizon) throw std::out_of_range("time index out of range");
  const Eigen::Index k = spec.dim();
  switch (spec.kind) {
    case AgentKind::Stationary:
      return spec.rho_star;
    case AgentKind::Stepping: {
      if (!spec.t_star) throw std::invalid_argument("stepping agent requires t_star");
      return t <= *spec.t_star ? uniform_preferences(k) : spec.rho_star;
    }
    case AgentKind::Regressing: {
      if (!spec.t_star || !spec.gamma) throw std::invalid_argument("regressing agent requires t_star and gamma");
      const double ts = static_cast<double>(*spec.t_star);
      const RewardParameter rho0 = uniform_preferences(k);
      if (t <= *spec.t_star) {
        const double w = static_cast<double>(t) / ts;
        return w * spec.rho_star + (1.0 - w) * rho0;
      }
      const RewardParameter rho_gamma = *spec.gamma * spec.rho_star + (1.0 - *spec.gamma) * rho0;
      const double w = (static_cast<double>(t) - ts) / (static_cast<double>(horizon) - ts);
      return w * rho_gamma + (1.0 - w) * spec.rho_star;
    }
    case AgentKind::Sampling: {
      if (!spec.initial_belief) throw std::invalid_argument("sampling agent requires initial_belief");
      const auto beliefs = belief_trajectory(*spec.initial_belief, history, spec.sigma, spec.update_rule);
      const auto& b = beliefs.back();
      return sample_gaussian(b.mean, cholesky_lower(b.covariance, "belief covariance"), rng);
    }
  }
  throw std::logic_error("unhandled agent kind");
}

struct SimulationTrace {
  Dataset dataset;
  std::vector<RewardParameter> latent_rho;       // length T
  std::vector<double> latent_rewards;            // length T
  std::vector<GaussianBelief> latent_beliefs;    // Sampling only: β_1..β_{T+1}

  /// Ground-truth belief mean at 1-based step t: μ_t for Sampling, ρ_t otherwise.
  Vector true_belief_mean(std::size_t t0) const {
    return latent_beliefs.empty() ? latent_rho.at(t0) : latent_beliefs.at(t0).mean;
  }
};

inline SimulationTrace simulate(const AgentSpec& spec, std::span<const ContextSet> contexts,
                                std::uint64_t seed, std::vector<std::string> feature_names = {}) {
  if (contexts.empty()) throw std::invalid_argument("simulate needs at least one context");
  const auto horizon = static_cast<Eigen::Index>(contexts.size());
  spec.validate(horizon);
  const Eigen::Index k = spec.dim();
  for (const auto& c : contexts)
    if (c.dim() != k) throw std::invalid_argument("context dimension does not match rho_star");

  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, spec.sigma);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  SimulationTrace trace;
  trace.dataset.feature_names = std::move(feature_names);
  if (trace.dataset.feature_names.empty())
    for (Eigen::Index j = 0; j < k; ++j) trace.dataset.feature_names.push_back("x" + std::to_string(j + 1));

  std::optional<GaussianBelief> belief;
  if (spec.kind == AgentKind::Sampling) {
    belief = *spec.initial_belief;
    trace.latent_beliefs.push_back(*belief);
  }

  for (Eigen::Index t = 1; t <= horizon; ++t) {
    const ContextSet& ctx = contexts[static_cast<std::size_t>(t - 1)];
    RewardParameter rho;
    if (belief) {
      // Same draw effective_rho would make, without refolding the history.
      rho = sample_gaussian(belief->mean, cholesky_lower(belief->covariance, "belief covariance"), rng);
    } else {
      rho = effective_rho(spec, t, horizon, {}, rng);
    }
    const Vector probs = action_probabilities(rho, ctx, spec.alpha);
    double u = unit(rng);
    Eigen::Index action = probs.size() - 1;
    for (Eigen::Index a = 0; a < probs.size(); ++a) {
      if (u < probs(a)) {
        action = a;
        break;
      }
      u -= probs(a);
    }
    const double reward = mean_reward(spec.rho_star, ctx, action) + noise(rng);

    trace.dataset.steps.push_back({ctx, action});
    trace.latent_rho.push_back(rho);
    trace.latent_rewards.push_back(reward);
    if (belief) {
      belief = belief_update(*belief, ctx.arm(action), reward, spec.sigma, spec.update_rule);
      trace.latent_beliefs.push_back(*belief);
    }
  }
  return trace;
}

}  // namespace icb
