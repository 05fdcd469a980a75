#pragma once

// Linear-Gaussian contextual bandit kernel: mean rewards, soft-optimal
// action selection and the recursive Gaussian belief update.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "icb/linalg.hpp"

namespace icb {

/// Reward parameter ρ: weights of the linear mean reward ⟨ρ, x(a)⟩.
using RewardParameter = Vector;

/// Per-arm feature vectors observed at one time step (one row per arm).
class ContextSet {
 public:
  ContextSet() = default;
  explicit ContextSet(Matrix arms) : arms_(std::move(arms)) { validate(); }

  const Matrix& arms() const { return arms_; }
  Eigen::Index num_arms() const { return arms_.rows(); }
  Eigen::Index dim() const { return arms_.cols(); }
  Vector arm(Eigen::Index a) const {
    check_arm(a);
    return arms_.row(a).transpose();
  }

  void check_arm(Eigen::Index a) const {
    if (a < 0 || a >= arms_.rows()) throw std::out_of_range("arm index out of range");
  }

  bool operator==(const ContextSet& o) const {
    return arms_.rows() == o.arms_.rows() && arms_.cols() == o.arms_.cols() && arms_ == o.arms_;
  }

 private:
  void validate() const {
    if (arms_.rows() < 1) throw std::invalid_argument("context needs at least one arm");
    if (arms_.cols() < 1) throw std::invalid_argument("context feature dimension must be >= 1");
    if (!arms_.allFinite()) throw std::invalid_argument("context features must be finite");
  }

  Matrix arms_;
};

/// Gaussian belief N(mean, covariance) over reward parameters.
struct GaussianBelief {
  Vector mean;
  Matrix covariance;

  static GaussianBelief standard(Eigen::Index k) {
    return {Vector::Zero(k), Matrix::Identity(k, k)};
  }

  void validate() const {
    if (covariance.rows() != mean.size() || covariance.cols() != mean.size())
      throw std::invalid_argument("belief mean/covariance dimension mismatch");
    if (!mean.allFinite() || !covariance.allFinite())
      throw NumericalError("belief contains non-finite values");
    if (max_asymmetry(covariance) >= 1e-10) throw NumericalError("belief covariance is not symmetric");
    cholesky_lower(covariance, "belief covariance");
  }
};

struct Observation {
  ContextSet context;
  Eigen::Index action = 0;
  double reward = 0.0;
};

/// How the reward enters the posterior-mean update. `AsWritten` omits the
/// 1/σ² factor on r·x; `StandardBayes` is the textbook conjugate update.
enum class MeanUpdateRule { AsWritten, StandardBayes };

inline double mean_reward(const RewardParameter& rho, const ContextSet& ctx, Eigen::Index a) {
  if (rho.size() != ctx.dim()) throw std::invalid_argument("reward parameter dimension mismatch");
  ctx.check_arm(a);
  return ctx.arms().row(a).dot(rho);
}

/// Log of the soft-optimal action probabilities exp(α R̄(a)) / Σ exp(α R̄(a')).
inline Vector log_action_probabilities(const RewardParameter& rho, const ContextSet& ctx,
                                       double alpha) {
  if (!std::isfinite(alpha) || alpha < 0.0) throw std::invalid_argument("alpha must be finite and >= 0");
  if (rho.size() != ctx.dim()) throw std::invalid_argument("reward parameter dimension mismatch");
  const Vector means = ctx.arms() * rho;
  if (!means.allFinite()) throw NumericalError("non-finite mean reward");
  Vector logits = alpha * means;
  if (alpha == 0.0) logits.setZero();
  const double top = logits.maxCoeff();
  const double lse = top + std::log((logits.array() - top).exp().sum());
  return logits.array() - lse;
}

inline Vector action_probabilities(const RewardParameter& rho, const ContextSet& ctx, double alpha) {
  return log_action_probabilities(rho, ctx, alpha).array().exp();
}

/// log Pr(a | x, ρ) without allocating the full distribution.
inline double log_action_likelihood(const RewardParameter& rho, const Matrix& arms,
                                    Eigen::Index a, double alpha) {
  const Eigen::Index n = arms.rows();
  double top = -std::numeric_limits<double>::infinity();
  double chosen = 0.0;
  // Small arm counts: two passes over the rows beat building a temporary.
  for (Eigen::Index i = 0; i < n; ++i) {
    const double z = alpha * arms.row(i).dot(rho);
    top = std::max(top, z);
    if (i == a) chosen = z;
  }
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) sum += std::exp(alpha * arms.row(i).dot(rho) - top);
  return chosen - top - std::log(sum);
}

/// One Bayesian update of a Gaussian belief after observing reward r for
/// features x. Rank-one Sherman-Morrison form, no matrix inversion.
inline GaussianBelief belief_update(const GaussianBelief& b, const Vector& x, double r, double sigma,
                                    MeanUpdateRule rule = MeanUpdateRule::AsWritten) {
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be > 0");
  if (x.size() != b.mean.size()) throw std::invalid_argument("feature dimension mismatch");
  const double s2 = sigma * sigma;
  const Vector sx = b.covariance * x;
  const double q = x.dot(sx);
  const double denom = s2 + q;
  if (!(denom > 0.0) || !std::isfinite(denom)) throw NumericalError("belief covariance is not positive definite");
  GaussianBelief out;
  out.covariance = symmetrized(b.covariance - sx * sx.transpose() / denom);
  // μ' = Σ'(Σ⁻¹μ + c·r·x) with c = 1 (as written) or 1/σ² (standard).
  const double scaled_r = rule == MeanUpdateRule::AsWritten ? r * s2 : r;
  out.mean = b.mean + sx * ((scaled_r - x.dot(b.mean)) / denom);
  return out;
}

/// Beliefs β_1..β_{n+1} obtained by folding `belief_update` over a history.
inline std::vector<GaussianBelief> belief_trajectory(const GaussianBelief& initial,
                                                     std::span<const Observation> history,
                                                     double sigma,
                                                     MeanUpdateRule rule = MeanUpdateRule::AsWritten) {
  initial.validate();
  std::vector<GaussianBelief> out;
  out.reserve(history.size() + 1);
  out.push_back(initial);
  for (const auto& obs : history) {
    out.push_back(belief_update(out.back(), obs.context.arm(obs.action), obs.reward, sigma, rule));
  }
  return out;
}

/// Same fold, driven by the chosen-arm feature rows (T×k) and rewards.
inline std::vector<GaussianBelief> belief_trajectory(const GaussianBelief& initial,
                                                     const Matrix& chosen_features,
                                                     const Vector& rewards, double sigma,
                                                     MeanUpdateRule rule = MeanUpdateRule::AsWritten) {
  if (chosen_features.rows() != rewards.size()) throw std::invalid_argument("reward count mismatch");
  std::vector<GaussianBelief> out;
  out.reserve(static_cast<std::size_t>(rewards.size()) + 1);
  out.push_back(initial);
  for (Eigen::Index t = 0; t < rewards.size(); ++t) {
    out.push_back(belief_update(out.back(), chosen_features.row(t).transpose(), rewards(t), sigma, rule));
  }
  return out;
}

}  // namespace icb
