#pragma once

// Inference under the smooth-belief model: ρ_t ~ N(β_t, Σ_P) with a
// Gaussian random-walk prior β_t = Σ_{s≤t} ν_s, ν_s ~ N(0, Σ_B).

#include <cstdint>
#include <vector>

#include "icb/bandit.hpp"
#include "icb/dataset.hpp"
#include "icb/sampling.hpp"

namespace icb {

struct Model2Config {
  Matrix sigma_p;  // spread of ρ_t around β_t
  Matrix sigma_b;  // increment covariance
  double alpha = 25.0;
  int burn_in = 10000;
  int num_samples = 10000;
  bool keep_samples = false;
  std::uint64_t seed = 0;

  /// Σ_P = (0.05·0.9)² I, Σ_B = (0.05·0.1)² I.
  static Model2Config defaults(Eigen::Index k) {
    Model2Config c;
    c.sigma_p = std::pow(0.05 * 0.90, 2) * Matrix::Identity(k, k);
    c.sigma_b = std::pow(0.05 * (1.0 - 0.90), 2) * Matrix::Identity(k, k);
    return c;
  }

  void validate(Eigen::Index k) const {
    if (sigma_p.rows() != k || sigma_p.cols() != k || sigma_b.rows() != k || sigma_b.cols() != k)
      throw std::invalid_argument("Sigma_P / Sigma_B must be k x k");
    if (max_asymmetry(sigma_p) >= 1e-10 || max_asymmetry(sigma_b) >= 1e-10)
      throw std::invalid_argument("Sigma_P / Sigma_B must be symmetric");
    cholesky_lower(sigma_p, "Sigma_P");
    cholesky_lower(sigma_b, "Sigma_B");
    if (!std::isfinite(alpha) || alpha < 0.0) throw std::invalid_argument("alpha must be finite and >= 0");
    if (burn_in < 0 || num_samples < 1) throw std::invalid_argument("burn_in must be >= 0 and num_samples >= 1");
  }
};

struct IncrementChain {
  Matrix nu;    // T×k increments ν_1..ν_T
  Matrix rhos;  // T×k

  Matrix beliefs() const {
    Matrix b = nu;
    for (Eigen::Index t = 1; t < b.rows(); ++t) b.row(t) += b.row(t - 1);
    return b;
  }
};

struct VectorGaussian {
  Vector mean;
  Matrix covariance;
};

/// Exact conditional of ν_t (0-based t) given the other increments and ρ_{1:T}:
/// precision Σ_B⁻¹ + (T−t)Σ_P⁻¹ (0-based count of τ ≥ t), mean through
/// Σ_P⁻¹ Σ_{τ≥t} (ρ_τ − β̄_{τ,¬t}).
inline VectorGaussian nu_conditional(Eigen::Index t, const IncrementChain& chain, const Matrix& sigma_p,
                                     const Matrix& sigma_b) {
  const Eigen::Index horizon = chain.nu.rows();
  if (t < 0 || t >= horizon) throw std::out_of_range("nu_conditional: t out of range");
  const Matrix prec_p = spd_inverse(sigma_p, "Sigma_P");
  const Matrix prec_b = spd_inverse(sigma_b, "Sigma_B");
  const double count = static_cast<double>(horizon - t);
  const Matrix precision = prec_b + count * prec_p;
  const Matrix cov = spd_inverse(precision, "nu conditional precision");

  Vector others = Vector::Zero(chain.nu.cols());
  for (Eigen::Index s = 0; s < t; ++s) others += chain.nu.row(s).transpose();
  Vector total = Vector::Zero(chain.nu.cols());
  for (Eigen::Index tau = t; tau < horizon; ++tau) {
    if (tau > t) others += chain.nu.row(tau).transpose();
    total += chain.rhos.row(tau).transpose() - others;
  }
  return {cov * prec_p * total, cov};
}

struct Model2Estimate {
  Matrix belief_means;  // T×k posterior mean of β_t
  Matrix belief_sd;     // T×k posterior standard deviation of β_t
  std::vector<Matrix> samples;  // retained β_{1:T} draws when keep_samples
};

namespace detail {

/// Per-t reward-independent pieces of the increment conditionals.
struct IncrementSchedule {
  std::vector<Matrix> gain;   // C_t Σ_P⁻¹
  std::vector<Matrix> chol;   // chol(C_t)
  Matrix chol_p;

  IncrementSchedule(Eigen::Index horizon, const Matrix& sigma_p, const Matrix& sigma_b) {
    const Matrix prec_p = spd_inverse(sigma_p, "Sigma_P");
    const Matrix prec_b = spd_inverse(sigma_b, "Sigma_B");
    chol_p = cholesky_lower(sigma_p, "Sigma_P");
    gain.resize(static_cast<std::size_t>(horizon));
    chol.resize(static_cast<std::size_t>(horizon));
    for (Eigen::Index t = 0; t < horizon; ++t) {
      const Matrix cov = spd_inverse(prec_b + static_cast<double>(horizon - t) * prec_p, "nu conditional precision");
      gain[static_cast<std::size_t>(t)] = cov * prec_p;
      chol[static_cast<std::size_t>(t)] = cholesky_lower(cov, "nu conditional covariance");
    }
  }
};

}  // namespace detail

struct NoIncrementObserver {
  void operator()(Eigen::Index, const Vector&, const IncrementChain&) const {}
};

/// Systematic-scan sweep: ν_t from its exact conditional, then ρ_t by one MH
/// step with proposal N(β_t, Σ_P). Updates the chain in place.
template <class Observer = NoIncrementObserver>
void gibbs_sweep_model2(IncrementChain& chain, const detail::IncrementSchedule& schedule, const Dataset& data,
                       double alpha, Rng& rng, Observer&& observe = {}) {
  const Eigen::Index horizon = chain.nu.rows();
  const Eigen::Index k = chain.nu.cols();
  // future_rho[t] = Σ_{τ≥t} ρ_τ; future_nu[t] = Σ_{s>t} (T−s) ν_s (0-based counts).
  Matrix future_rho(horizon, k);
  Matrix future_nu(horizon, k);
  {
    Vector acc_rho = Vector::Zero(k);
    Vector acc_nu = Vector::Zero(k);
    for (Eigen::Index t = horizon - 1; t >= 0; --t) {
      acc_rho += chain.rhos.row(t).transpose();
      future_rho.row(t) = acc_rho.transpose();
      future_nu.row(t) = acc_nu.transpose();
      acc_nu += static_cast<double>(horizon - t) * chain.nu.row(t).transpose();
    }
  }
  Vector prefix = Vector::Zero(k);  // Σ_{s<t} ν_s, updated values
  for (Eigen::Index t = 0; t < horizon; ++t) {
    const auto ti = static_cast<std::size_t>(t);
    const Vector total = future_rho.row(t).transpose() - static_cast<double>(horizon - t) * prefix -
                         future_nu.row(t).transpose();
    const Vector mean = schedule.gain[ti] * total;
    observe(t, mean, chain);
    chain.nu.row(t) = sample_gaussian(mean, schedule.chol[ti], rng).transpose();
    prefix += chain.nu.row(t).transpose();

    const Step& step = data.steps[ti];
    chain.rhos.row(t) =
        mh_rho_step(prefix, schedule.chol_p, step.context.arms(), step.chosen, alpha, rng).transpose();
  }
}

inline Model2Estimate run_icb_model2(const Dataset& data, const Model2Config& config) {
  data.validate();
  const Eigen::Index horizon = data.horizon();
  const Eigen::Index k = data.dim();
  if (horizon < 1) throw std::invalid_argument("dataset is empty");
  config.validate(k);

  const detail::IncrementSchedule schedule(horizon, config.sigma_p, config.sigma_b);
  Rng rng(config.seed);
  IncrementChain chain{Matrix::Zero(horizon, k), Matrix::Zero(horizon, k)};

  Model2Estimate est;
  Matrix sum = Matrix::Zero(horizon, k);
  Matrix sum_sq = Matrix::Zero(horizon, k);
  const int total = config.burn_in + config.num_samples;
  for (int it = 0; it < total; ++it) {
    gibbs_sweep_model2(chain, schedule, data, config.alpha, rng);
    if (it < config.burn_in) continue;
    const Matrix beliefs = chain.beliefs();
    sum += beliefs;
    sum_sq += beliefs.cwiseAbs2();
    if (config.keep_samples) est.samples.push_back(beliefs);
  }
  const double n = static_cast<double>(config.num_samples);
  est.belief_means = sum / n;
  est.belief_sd = (sum_sq / n - est.belief_means.cwiseAbs2()).cwiseMax(0.0).cwiseSqrt();
  return est;
}

}  // namespace icb
