#pragma once

// Comparison algorithms: uniform preferences, Bayesian IRL with a stationary
// reward, M-fold IRL over contiguous sections, and trajectory-ranking
// (preference-based) IRL that assumes later decisions are preferred.

#include <cstdint>
#include <utility>
#include <vector>

#include "icb/agents.hpp"
#include "icb/bandit.hpp"
#include "icb/dataset.hpp"
#include "icb/optim.hpp"

namespace icb {

inline RewardParameter uniform_baseline(Eigen::Index k) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  return uniform_preferences(k);
}

struct IrlConfig {
  double alpha = 25.0;
  int mh_iterations = 100000;
  int burn_in = 10000;
  int thin = 1000;
  double proposal_std = 0.01;
  std::uint64_t seed = 0;

  int num_samples() const { return (mh_iterations - burn_in) / thin; }

  void validate() const {
    if (!std::isfinite(alpha) || alpha < 0.0) throw std::invalid_argument("alpha must be finite and >= 0");
    if (burn_in < 0 || burn_in >= mh_iterations) throw std::invalid_argument("burn_in must be < mh_iterations");
    if (thin < 1) throw std::invalid_argument("thin must be >= 1");
    if (!(proposal_std > 0.0)) throw std::invalid_argument("proposal_std must be > 0");
    if (num_samples() < 1) throw std::invalid_argument("IRL settings collect no samples");
  }
};

struct IrlResult {
  RewardParameter estimate;
  std::vector<RewardParameter> samples;
  double acceptance_rate = 0.0;
};

inline double irl_log_likelihood(const RewardParameter& rho, const Dataset& data, double alpha) {
  double ll = 0.0;
  for (const auto& s : data.steps) ll += log_action_likelihood(rho, s.context.arms(), s.chosen, alpha);
  return ll;
}

/// Random-walk Metropolis-Hastings over a stationary ρ with the soft-optimal
/// action likelihood and a standard-normal prior. Returns the sample mean.
inline IrlResult bayesian_irl(const Dataset& data, const IrlConfig& config) {
  config.validate();
  const Eigen::Index k = data.dim();
  if (k < 1) throw std::invalid_argument("dataset has no features");
  Rng rng(config.seed);
  std::normal_distribution<double> step(0.0, config.proposal_std);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  auto log_post = [&](const Vector& rho) {
    return irl_log_likelihood(rho, data, config.alpha) - 0.5 * rho.squaredNorm();
  };
  Vector current = Vector::Zero(k);
  double current_lp = log_post(current);
  long accepted = 0;

  IrlResult out;
  out.samples.reserve(static_cast<std::size_t>(config.num_samples()));
  for (int i = 0; i < config.mh_iterations; ++i) {
    Vector proposal = current;
    for (Eigen::Index j = 0; j < k; ++j) proposal(j) += step(rng);
    const double lp = log_post(proposal);
    if (std::log(unit(rng)) < lp - current_lp) {
      current = std::move(proposal);
      current_lp = lp;
      ++accepted;
    }
    const int after = i + 1 - config.burn_in;
    if (after > 0 && after % config.thin == 0 &&
        static_cast<int>(out.samples.size()) < config.num_samples())
      out.samples.push_back(current);
  }
  out.acceptance_rate = static_cast<double>(accepted) / config.mh_iterations;
  out.estimate = Vector::Zero(k);
  for (const auto& s : out.samples) out.estimate += s;
  out.estimate /= static_cast<double>(out.samples.size());
  return out;
}

/// 1-based inclusive fold bounds {1+⌊(j−1)T/M⌋, …, ⌊jT/M⌋} for j = 1..M.
inline std::vector<std::pair<Eigen::Index, Eigen::Index>> fold_bounds(Eigen::Index horizon, Eigen::Index folds) {
  if (folds < 1 || folds > horizon) throw std::invalid_argument("fold count M must satisfy 1 <= M <= T");
  std::vector<std::pair<Eigen::Index, Eigen::Index>> out;
  for (Eigen::Index j = 1; j <= folds; ++j) out.emplace_back(1 + (j - 1) * horizon / folds, j * horizon / folds);
  return out;
}

struct MFoldResult {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> bounds;
  std::vector<RewardParameter> fold_estimates;
  Matrix belief_means;  // T×k, each row the estimate of its fold
};

/// Independent Bayesian IRL on each contiguous fold. Fold j uses seed + (j−1).
inline MFoldResult mfold_irl(const Dataset& data, Eigen::Index folds, const IrlConfig& config) {
  MFoldResult out;
  out.bounds = fold_bounds(data.horizon(), folds);
  out.belief_means.resize(data.horizon(), data.dim());
  for (std::size_t j = 0; j < out.bounds.size(); ++j) {
    const auto [first, last] = out.bounds[j];
    IrlConfig fold_cfg = config;
    fold_cfg.seed = config.seed + j;
    const auto fold = bayesian_irl(data.slice(static_cast<std::size_t>(first - 1), static_cast<std::size_t>(last)),
                                   fold_cfg);
    out.fold_estimates.push_back(fold.estimate);
    for (Eigen::Index t = first - 1; t < last; ++t) out.belief_means.row(t) = fold.estimate.transpose();
  }
  return out;
}

struct TrexConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  int patience = 100;
  int max_iterations = 20000;
  std::size_t max_pairs = 100000;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be > 0");
    if (patience < 1) throw std::invalid_argument("patience must be >= 1");
    if (max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
    if (max_pairs < 1) throw std::invalid_argument("max_pairs must be >= 1");
  }
};

struct TrexResult {
  RewardParameter estimate;     // raw minimizer (best loss seen)
  std::vector<double> loss_trace;
  int iterations = 0;
};

/// Differences x_{t'}(a_{t'}) − x_t(a_t) over ordered pairs t < t', all of
/// them or a uniform subsample when there are more than `max_pairs`.
inline Matrix ranking_pairs(const Matrix& chosen, std::size_t max_pairs, Rng& rng) {
  const auto horizon = static_cast<std::size_t>(chosen.rows());
  const std::size_t total = horizon * (horizon - 1) / 2;
  if (total <= max_pairs) {
    Matrix d(static_cast<Eigen::Index>(total), chosen.cols());
    Eigen::Index row = 0;
    for (Eigen::Index t = 0; t < chosen.rows(); ++t)
      for (Eigen::Index u = t + 1; u < chosen.rows(); ++u) d.row(row++) = chosen.row(u) - chosen.row(t);
    return d;
  }
  std::uniform_int_distribution<Eigen::Index> pick(0, chosen.rows() - 1);
  Matrix d(static_cast<Eigen::Index>(max_pairs), chosen.cols());
  for (Eigen::Index row = 0; row < d.rows(); ++row) {
    Eigen::Index a = pick(rng), b = pick(rng);
    while (a == b) b = pick(rng);
    if (a > b) std::swap(a, b);
    d.row(row) = chosen.row(b) - chosen.row(a);
  }
  return d;
}

/// −Σ log σ(⟨ρ, d⟩) over pair differences d and its gradient.
inline std::pair<double, Vector> ranking_loss(const Matrix& pair_diffs, const Vector& rho) {
  const Vector z = pair_diffs * rho;
  double loss = 0.0;
  Vector weights(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    // softplus(−z) and σ(−z), both stable for large |z|.
    const double zi = z(i);
    loss += zi > 0 ? std::log1p(std::exp(-zi)) : -zi + std::log1p(std::exp(zi));
    weights(i) = zi > 0 ? std::exp(-zi) / (1.0 + std::exp(-zi)) : 1.0 / (1.0 + std::exp(zi));
  }
  return {loss, -(pair_diffs.transpose() * weights)};
}

inline TrexResult trex(const Dataset& data, const TrexConfig& config, const Vector* initial = nullptr) {
  config.validate();
  if (data.horizon() < 2) throw std::invalid_argument("trajectory ranking needs T >= 2");
  Rng rng(config.seed);
  const Matrix pairs = ranking_pairs(data.chosen_features(), config.max_pairs, rng);
  Adam adam(config.learning_rate, config.beta1, config.beta2);

  Vector rho = initial ? *initial : Vector::Zero(data.dim());
  TrexResult out;
  out.estimate = rho;
  double best = std::numeric_limits<double>::infinity();
  int stale = 0;
  for (int it = 0; it < config.max_iterations; ++it) {
    const auto [loss, grad] = ranking_loss(pairs, rho);
    out.loss_trace.push_back(loss);
    out.iterations = it + 1;
    if (loss < best) {
      best = loss;
      out.estimate = rho;
      stale = 0;
    } else if (++stale >= config.patience) {
      break;
    }
    rho = adam.step(rho, grad);
  }
  return out;
}

/// Rescales to unit Σ|ρ_i|, keeping signs; the zero vector is returned as is.
inline RewardParameter normalize_l1(const RewardParameter& rho) {
  const double s = rho.cwiseAbs().sum();
  return s > 0.0 ? RewardParameter(rho / s) : rho;
}

}  // namespace icb
