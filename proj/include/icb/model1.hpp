#pragma once

// Inference under the Bayesian-learner model: the agent's belief β_t is the
// Gaussian posterior obtained by folding its (latent) rewards into β_1.
// Expectation-maximization over (ρ*, β_1) with a Gibbs / Metropolis-Hastings
// E-step over latent rewards r_{1:T} and per-step reward parameters ρ_{1:T}.

#include <cstdint>
#include <vector>

#include "icb/bandit.hpp"
#include "icb/dataset.hpp"
#include "icb/optim.hpp"
#include "icb/sampling.hpp"

namespace icb {

struct Model1Config {
  double sigma = 0.25;
  double alpha = 25.0;
  int chain_length = 1000;  // N, Gibbs sweeps per E-step
  int burn_in = 0;
  int thin = 1;
  int em_iterations = 100;
  double learning_rate = 0.1;
  double rms_discount = 0.9;
  /// Draw the initial (ρ̂*, β̂_1) from the prior; otherwise start at its mean.
  bool sample_initial_estimates = true;
  /// Leave the prior term Σ_1⁻¹μ_1 out of μ̄_{τ,¬t} in the reward conditional.
  bool literal_mu_bar = false;
  MeanUpdateRule update_rule = MeanUpdateRule::AsWritten;
  std::uint64_t seed = 0;

  double reward_scale() const {
    return update_rule == MeanUpdateRule::AsWritten ? 1.0 : 1.0 / (sigma * sigma);
  }

  void validate() const {
    if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be > 0");
    if (!std::isfinite(alpha) || alpha < 0.0) throw std::invalid_argument("alpha must be finite and >= 0");
    if (chain_length < 1) throw std::invalid_argument("chain length N must be >= 1");
    if (burn_in < 0 || thin < 1) throw std::invalid_argument("burn_in must be >= 0 and thin >= 1");
    if (em_iterations < 0) throw std::invalid_argument("em_iterations must be >= 0");
    if (!(learning_rate >= 0.0)) throw std::invalid_argument("learning rate must be >= 0");
    if (!(rms_discount >= 0.0 && rms_discount < 1.0)) throw std::invalid_argument("rms_discount must lie in [0,1)");
  }
};

/// Estimates (ρ*, β_1) with β_1 = {μ_1, diag(exp(log_diag))}.
struct Model1Params {
  RewardParameter rho_star;
  Vector mu1;
  Vector log_diag;

  Eigen::Index dim() const { return rho_star.size(); }

  GaussianBelief beta1() const {
    return {mu1, Matrix(log_diag.array().exp().matrix().asDiagonal())};
  }

  Vector flat() const {
    Vector v(3 * dim());
    v << rho_star, mu1, log_diag;
    return v;
  }

  static Model1Params from_flat(const Vector& v) {
    const Eigen::Index k = v.size() / 3;
    return {v.segment(0, k), v.segment(k, k), v.segment(2 * k, k)};
  }

  /// Independent standard normals on every entry of ρ*, μ_1 and log-diag(Σ_1).
  static double log_prior(const Vector& flat) {
    return -0.5 * flat.squaredNorm() - 0.5 * static_cast<double>(flat.size()) * std::log(2.0 * std::numbers::pi);
  }
  static Vector log_prior_gradient(const Vector& flat) { return -flat; }
};

/// Latent Gibbs state for the Bayesian-learner model.
struct RewardChain {
  Vector rewards;  // r_1..r_T
  Matrix rhos;     // T×k, row t-1 holds ρ_t

  bool operator==(const RewardChain& o) const { return rewards == o.rewards && rhos == o.rhos; }
};

struct ScalarGaussian {
  double mean = 0.0;
  double variance = 1.0;
};

/// Reward-independent quantities of the belief recursion for a fixed β_1 and
/// chosen-arm feature sequence: Σ_t, its Cholesky factor, and the suffix sums
/// S_t = Σ_{τ>t} Σ_τ used by the reward conditional.
class BeliefSchedule {
 public:
  BeliefSchedule(const GaussianBelief& beta1, const Matrix& chosen_features, double sigma,
                 double reward_scale = 1.0)
      : features_(chosen_features), sigma_(sigma), reward_scale_(reward_scale) {
    beta1.validate();
    const Eigen::Index horizon = features_.rows();
    const Eigen::Index k = features_.cols();
    if (beta1.mean.size() != k) throw std::invalid_argument("beta1 dimension mismatch");
    const Matrix prec1 = spd_inverse(beta1.covariance, "initial belief covariance");
    prior_info_ = prec1 * beta1.mean;

    covariances_.resize(static_cast<std::size_t>(horizon));
    chol_.resize(static_cast<std::size_t>(horizon));
    Matrix cov = beta1.covariance;
    for (Eigen::Index t = 0; t < horizon; ++t) {
      covariances_[static_cast<std::size_t>(t)] = cov;
      chol_[static_cast<std::size_t>(t)] = cholesky_lower(cov, "belief covariance");
      const Vector x = features_.row(t).transpose();
      const Vector sx = cov * x;
      cov = symmetrized(cov - sx * sx.transpose() / (sigma * sigma + x.dot(sx)));
    }

    future_sx_.resize(static_cast<std::size_t>(horizon));
    future_xsx_ = Vector::Zero(horizon);
    Matrix suffix = Matrix::Zero(k, k);
    for (Eigen::Index t = horizon - 1; t >= 0; --t) {
      const Vector x = features_.row(t).transpose();
      future_sx_[static_cast<std::size_t>(t)] = suffix * x;
      future_xsx_(t) = x.dot(future_sx_[static_cast<std::size_t>(t)]);
      suffix += covariances_[static_cast<std::size_t>(t)];
    }
    variances_ = Vector(horizon);
    for (Eigen::Index t = 0; t < horizon; ++t) {
      const double precision = 1.0 / (sigma * sigma) + reward_scale_ * reward_scale_ * future_xsx_(t);
      if (!(precision > 0.0) || !std::isfinite(precision)) throw NumericalError("non-positive reward conditional variance");
      variances_(t) = 1.0 / precision;
    }
  }

  Eigen::Index horizon() const { return features_.rows(); }
  Eigen::Index dim() const { return features_.cols(); }
  double sigma() const { return sigma_; }
  double reward_scale() const { return reward_scale_; }
  const Matrix& features() const { return features_; }
  /// Σ_1⁻¹ μ_1.
  const Vector& prior_info() const { return prior_info_; }
  /// Σ_t for 0-based t (belief in force at step t+1).
  const Matrix& covariance(Eigen::Index t) const { return covariances_[static_cast<std::size_t>(t)]; }
  const std::vector<Matrix>& covariances() const { return covariances_; }
  const Matrix& chol(Eigen::Index t) const { return chol_[static_cast<std::size_t>(t)]; }
  /// (Σ_{τ>t} Σ_τ) x_t.
  const Vector& future_sx(Eigen::Index t) const { return future_sx_[static_cast<std::size_t>(t)]; }
  /// Variance of the reward conditional at t (independent of the chain state).
  double conditional_variance(Eigen::Index t) const { return variances_(t); }

 private:
  Matrix features_;
  double sigma_;
  double reward_scale_;
  Vector prior_info_;
  std::vector<Matrix> covariances_;
  std::vector<Matrix> chol_;
  std::vector<Vector> future_sx_;
  Vector future_xsx_;
  Vector variances_;
};

/// Exact Gaussian conditional of r_t (0-based index t) given all other
/// rewards and every ρ_τ, evaluated term by term over τ > t.
inline ScalarGaussian reward_conditional(Eigen::Index t, const RewardChain& chain,
                                         const RewardParameter& rho_star_hat,
                                         const Vector& prior_info,
                                         const std::vector<Matrix>& covariances,
                                         const Matrix& chosen_features, double sigma,
                                         double reward_scale = 1.0, bool literal_mu_bar = false) {
  const Eigen::Index horizon = chosen_features.rows();
  if (t < 0 || t >= horizon) throw std::out_of_range("reward_conditional: t out of range");
  const double c = reward_scale;
  const Vector xt = chosen_features.row(t).transpose();
  double precision = 1.0 / (sigma * sigma);
  double numerator = rho_star_hat.dot(xt) / (sigma * sigma);

  // info accumulates Σ_1⁻¹μ_1 + c Σ_{i<τ, i≠t} r_i x_i as τ advances.
  Vector info = literal_mu_bar ? Vector::Zero(xt.size()) : prior_info;
  for (Eigen::Index i = 0; i < t; ++i) info += c * chain.rewards(i) * chosen_features.row(i).transpose();
  for (Eigen::Index tau = t + 1; tau < horizon; ++tau) {
    if (tau - 1 != t) info += c * chain.rewards(tau - 1) * chosen_features.row(tau - 1).transpose();
    const Matrix& cov = covariances[static_cast<std::size_t>(tau)];
    const Vector mu_bar = cov * info;
    precision += c * c * xt.dot(cov * xt);
    numerator += c * (chain.rhos.row(tau).transpose() - mu_bar).dot(xt);
  }
  if (!(precision > 0.0) || !std::isfinite(precision)) throw NumericalError("non-positive reward conditional variance");
  return {numerator / precision, 1.0 / precision};
}

inline ScalarGaussian reward_conditional(Eigen::Index t, const RewardChain& chain,
                                         const RewardParameter& rho_star_hat,
                                         const BeliefSchedule& schedule, bool literal_mu_bar = false) {
  return reward_conditional(t, chain, rho_star_hat, schedule.prior_info(), schedule.covariances(),
                            schedule.features(), schedule.sigma(), schedule.reward_scale(), literal_mu_bar);
}

/// Belief means μ_1..μ_T implied by β_1 (through the schedule) and a reward sequence.
inline Matrix implied_belief_means(const BeliefSchedule& schedule, const Vector& rewards) {
  const Eigen::Index horizon = schedule.horizon();
  Matrix out(horizon, schedule.dim());
  Vector info = schedule.prior_info();
  for (Eigen::Index t = 0; t < horizon; ++t) {
    out.row(t) = (schedule.covariance(t) * info).transpose();
    info += schedule.reward_scale() * rewards(t) * schedule.features().row(t).transpose();
  }
  return out;
}

struct NoSweepObserver {
  void operator()(Eigen::Index, const ScalarGaussian&, const RewardChain&) const {}
};

/// One systematic-scan sweep t = 1..T: draw r_t from its exact conditional,
/// rebuild β_t from the updated reward prefix, then take one MH step for ρ_t.
/// The observer sees each conditional together with the mixed chain state.
template <class Observer = NoSweepObserver>
RewardChain gibbs_sweep_model1(const RewardChain& prev, const RewardParameter& rho_star_hat,
                               const BeliefSchedule& schedule, const Dataset& data,
                               const Model1Config& config, Rng& rng, Observer&& observe = {}) {
  const Eigen::Index horizon = schedule.horizon();
  const Eigen::Index k = schedule.dim();
  const Matrix& x = schedule.features();
  const double c = schedule.reward_scale();
  const double s2 = schedule.sigma() * schedule.sigma();
  if (prev.rewards.size() != horizon || prev.rhos.rows() != horizon || prev.rhos.cols() != k)
    throw std::invalid_argument("chain state does not match dataset shape");

  // Suffix sums over the not-yet-updated coordinates τ > t:
  //   future_rho[t] = Σ_{τ>t} ρ_τ,  future_w[t] = Σ_{i>t} r_i S_i x_i.
  Matrix future_rho(horizon, k);
  Matrix future_w(horizon, k);
  {
    Vector acc_rho = Vector::Zero(k);
    Vector acc_w = Vector::Zero(k);
    for (Eigen::Index t = horizon - 1; t >= 0; --t) {
      future_rho.row(t) = acc_rho.transpose();
      future_w.row(t) = acc_w.transpose();
      acc_rho += prev.rhos.row(t).transpose();
      acc_w += prev.rewards(t) * schedule.future_sx(t);
    }
  }

  RewardChain state = prev;
  std::normal_distribution<double> unit_normal(0.0, 1.0);
  // info = Σ_1⁻¹μ_1 + c Σ_{i<t} r_i x_i with already-updated rewards.
  Vector info = schedule.prior_info();
  const Vector mu_bar_offset = config.literal_mu_bar ? schedule.prior_info() : Vector::Zero(k);
  for (Eigen::Index t = 0; t < horizon; ++t) {
    const auto xt = x.row(t);
    const Vector& sx = schedule.future_sx(t);
    const double numerator =
        rho_star_hat.dot(xt) / s2 +
        c * (xt.dot(future_rho.row(t)) - sx.dot(info - mu_bar_offset) - c * xt.dot(future_w.row(t)));
    ScalarGaussian cond{schedule.conditional_variance(t) * numerator, schedule.conditional_variance(t)};
    observe(t, cond, state);
    state.rewards(t) = cond.mean + std::sqrt(cond.variance) * unit_normal(rng);

    const Vector mean_t = schedule.covariance(t) * info;
    const Step& step = data.steps[static_cast<std::size_t>(t)];
    state.rhos.row(t) =
        mh_rho_step(mean_t, schedule.chol(t), step.context.arms(), step.chosen, config.alpha, rng).transpose();
    info += c * state.rewards(t) * xt.transpose();
  }
  return state;
}

/// Deterministic chain start: r_t = ⟨ρ̂*, x_t(a_t)⟩ and ρ_t = μ_t implied by those rewards.
inline RewardChain initial_chain(const RewardParameter& rho_star_hat, const BeliefSchedule& schedule) {
  RewardChain chain;
  chain.rewards = schedule.features() * rho_star_hat;
  chain.rhos = implied_belief_means(schedule, chain.rewards);
  return chain;
}

/// N Gibbs sweeps (after optional burn-in and thinning) from the deterministic start.
inline std::vector<RewardChain> e_step(const Model1Params& params, const Dataset& data,
                                       const Model1Config& config, Rng& rng) {
  config.validate();
  const BeliefSchedule schedule(params.beta1(), data.chosen_features(), config.sigma, config.reward_scale());
  RewardChain chain = initial_chain(params.rho_star, schedule);
  for (int i = 0; i < config.burn_in; ++i)
    chain = gibbs_sweep_model1(chain, params.rho_star, schedule, data, config, rng);
  std::vector<RewardChain> samples;
  samples.reserve(static_cast<std::size_t>(config.chain_length));
  for (int i = 0; i < config.chain_length; ++i) {
    for (int j = 0; j < config.thin; ++j)
      chain = gibbs_sweep_model1(chain, params.rho_star, schedule, data, config, rng);
    samples.push_back(chain);
  }
  return samples;
}

struct ObjectiveValue {
  double value = 0.0;
  Vector gradient;  // flat layout of Model1Params
};

/// Monte-Carlo estimate Q̄(ρ*, β_1) = (1/N) Σ_i Σ_t [log N(r_t; ⟨ρ*, x_t⟩, σ²)
/// + log N(ρ_t; μ_t, Σ_t)] and its analytic gradient in the flat
/// (ρ*, μ_1, log-diag Σ_1) parameterization. Softmax and context terms do
/// not depend on (ρ*, β_1) and are left out.
inline ObjectiveValue q_bar_and_gradient(const std::vector<RewardChain>& samples, const Model1Params& params,
                                         const Matrix& chosen_features, double sigma,
                                         double reward_scale = 1.0) {
  if (samples.empty()) throw std::invalid_argument("q_bar needs at least one sample");
  const Eigen::Index horizon = chosen_features.rows();
  const Eigen::Index k = chosen_features.cols();
  const double s2 = sigma * sigma;
  const Vector var1 = params.log_diag.array().exp();
  const Vector inv_var1 = var1.cwiseInverse();
  const Vector prior_info = params.mu1.cwiseProduct(inv_var1);

  // Reward-independent recursion: precision P_t, covariance Σ_t, log|2πΣ_t|.
  std::vector<Matrix> cov(static_cast<std::size_t>(horizon));
  std::vector<Matrix> prec(static_cast<std::size_t>(horizon));
  std::vector<double> log_norm(static_cast<std::size_t>(horizon));
  Matrix p = inv_var1.asDiagonal();
  for (Eigen::Index t = 0; t < horizon; ++t) {
    Eigen::LLT<Matrix> llt(p);
    if (llt.info() != Eigen::Success) throw NumericalError("singular belief covariance");
    prec[static_cast<std::size_t>(t)] = p;
    cov[static_cast<std::size_t>(t)] = symmetrized(llt.solve(Matrix::Identity(k, k)));
    const double log_det_prec = 2.0 * Matrix(llt.matrixL()).diagonal().array().log().sum();
    log_norm[static_cast<std::size_t>(t)] =
        static_cast<double>(k) * std::log(2.0 * std::numbers::pi) - log_det_prec;
    p += chosen_features.row(t).transpose() * chosen_features.row(t) / s2;
  }

  double value = 0.0;
  Vector g_rho = Vector::Zero(k);
  Vector g_mu = Vector::Zero(k);
  Vector g_logvar = Vector::Zero(k);
  const double log_norm_r = std::log(2.0 * std::numbers::pi * s2);
  for (const auto& s : samples) {
    if (s.rewards.size() != horizon || s.rhos.rows() != horizon) throw std::invalid_argument("sample shape mismatch");
    Vector info = prior_info;
    for (Eigen::Index t = 0; t < horizon; ++t) {
      const auto xt = chosen_features.row(t).transpose();
      const double resid = s.rewards(t) - params.rho_star.dot(xt);
      value += -0.5 * (log_norm_r + resid * resid / s2);
      g_rho += resid / s2 * xt;

      const auto ti = static_cast<std::size_t>(t);
      const Vector mu = cov[ti] * info;
      const Vector rho = s.rhos.row(t).transpose();
      const Vector d = rho - mu;
      value += -0.5 * (log_norm[ti] + d.dot(prec[ti] * d));
      g_mu += d.cwiseProduct(inv_var1);
      for (Eigen::Index j = 0; j < k; ++j) {
        g_logvar(j) += 0.5 * inv_var1(j) *
                       (d(j) * (rho(j) + mu(j) - 2.0 * params.mu1(j)) - cov[ti](j, j));
      }
      info += reward_scale * s.rewards(t) * xt;
    }
  }
  const double n = static_cast<double>(samples.size());
  ObjectiveValue out;
  out.value = value / n;
  out.gradient.resize(3 * k);
  out.gradient << g_rho / n, g_mu / n, g_logvar / n;
  return out;
}

inline double q_bar(const std::vector<RewardChain>& samples, const Model1Params& params,
                    const Matrix& chosen_features, double sigma, double reward_scale = 1.0) {
  return q_bar_and_gradient(samples, params, chosen_features, sigma, reward_scale).value;
}

/// One RMSprop ascent step on Q̄ + log prior.
inline Model1Params m_step(const Model1Params& params, RmsProp& optimizer,
                           const std::vector<RewardChain>& samples, const Matrix& chosen_features,
                           const Model1Config& config) {
  const auto q = q_bar_and_gradient(samples, params, chosen_features, config.sigma, config.reward_scale());
  const Vector flat = params.flat();
  const Vector grad = q.gradient + Model1Params::log_prior_gradient(flat);
  return Model1Params::from_flat(optimizer.step(flat, grad));
}

struct Model1Estimate {
  Model1Params params;
  Matrix reward_samples;             // N×T, last E-step
  Matrix belief_means;               // T×k, across-sample mean of μ_t
  std::vector<double> objective_trace;  // Q̄ + log prior at each EM iteration
  double sigma = 0.25;
  MeanUpdateRule update_rule = MeanUpdateRule::AsWritten;

  const RewardParameter& rho_star_hat() const { return params.rho_star; }
  GaussianBelief beta1_hat() const { return params.beta1(); }

  /// β_1..β_T implied by β̂_1 and the i-th reward sample.
  std::vector<GaussianBelief> belief_samples(Eigen::Index i, const Dataset& data) const {
    auto traj = belief_trajectory(beta1_hat(), data.chosen_features(), reward_samples.row(i).transpose(),
                                  sigma, update_rule);
    traj.pop_back();
    return traj;
  }
};

inline Model1Params initial_model1_params(Eigen::Index k, const Model1Config& config, Rng& rng) {
  if (!config.sample_initial_estimates) return Model1Params::from_flat(Vector::Zero(3 * k));
  return Model1Params::from_flat(standard_normal_vector(3 * k, rng));
}

inline Model1Estimate run_icb_model1(const Dataset& data, const Model1Config& config) {
  config.validate();
  data.validate();
  if (data.horizon() < 1) throw std::invalid_argument("dataset is empty");
  const Eigen::Index k = data.dim();
  const Matrix x = data.chosen_features();
  Rng rng(config.seed);

  Model1Estimate est;
  est.sigma = config.sigma;
  est.update_rule = config.update_rule;
  est.params = initial_model1_params(k, config, rng);
  RmsProp optimizer(config.learning_rate, config.rms_discount);

  std::vector<RewardChain> samples;
  for (int it = 0; it < config.em_iterations; ++it) {
    samples = e_step(est.params, data, config, rng);
    const auto q = q_bar_and_gradient(samples, est.params, x, config.sigma, config.reward_scale());
    const Vector flat = est.params.flat();
    est.objective_trace.push_back(q.value + Model1Params::log_prior(flat));
    est.params = Model1Params::from_flat(
        optimizer.step(flat, q.gradient + Model1Params::log_prior_gradient(flat)));
  }
  if (samples.empty()) samples = e_step(est.params, data, config, rng);

  const BeliefSchedule schedule(est.params.beta1(), x, config.sigma, config.reward_scale());
  est.reward_samples.resize(static_cast<Eigen::Index>(samples.size()), data.horizon());
  est.belief_means = Matrix::Zero(data.horizon(), k);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    est.reward_samples.row(static_cast<Eigen::Index>(i)) = samples[i].rewards.transpose();
    est.belief_means += implied_belief_means(schedule, samples[i].rewards);
  }
  est.belief_means /= static_cast<double>(samples.size());
  return est;
}

}  // namespace icb
