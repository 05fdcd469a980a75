#pragma once

#include "icb/bandit.hpp"
#include "icb/dataset.hpp"

namespace icb {

/// One independence Metropolis-Hastings iteration for ρ_t: draw ρ′ and ρ″
/// from N(mean, LLᵀ) and keep ρ′ with probability
/// min{1, Pr(a|x,ρ′) / Pr(a|x,ρ″)}, otherwise ρ″.
inline RewardParameter mh_rho_step(const Vector& mean, const Matrix& chol_lower, const Matrix& arms,
                                   Eigen::Index action, double alpha, Rng& rng) {
  const Vector first = sample_gaussian(mean, chol_lower, rng);
  const Vector second = sample_gaussian(mean, chol_lower, rng);
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  const double ll_first = log_action_likelihood(first, arms, action, alpha);
  const double ll_second = log_action_likelihood(second, arms, action, alpha);
  // Pr(a|x,ρ″) underflowed to zero: the ratio is +∞.
  if (ll_second == -std::numeric_limits<double>::infinity()) return first;
  const double accept = std::exp(std::min(0.0, ll_first - ll_second));
  return u < accept ? first : second;
}

inline RewardParameter mh_rho_step(const GaussianBelief& belief, const Step& step, double alpha, Rng& rng) {
  return mh_rho_step(belief.mean, cholesky_lower(belief.covariance, "belief covariance"),
                     step.context.arms(), step.chosen, alpha, rng);
}

}  // namespace icb
