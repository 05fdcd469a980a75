#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include <Eigen/LU>

#include "icb/icb.hpp"

namespace icb::test {

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = u(rng);
  return m;
}

inline Vector random_vector(Eigen::Index n, Rng& rng, double lo = -1.0, double hi = 1.0) {
  return random_matrix(n, 1, rng, lo, hi).col(0);
}

inline Matrix random_spd(Eigen::Index k, Rng& rng, double ridge = 0.2) {
  const Matrix a = random_matrix(k, k, rng, -1.0, 1.0);
  return symmetrized(a * a.transpose() / static_cast<double>(k) + ridge * Matrix::Identity(k, k));
}

inline Dataset random_dataset(Eigen::Index horizon, Eigen::Index k, Rng& rng, Eigen::Index arms = 3) {
  Dataset d;
  for (Eigen::Index j = 0; j < k; ++j) d.feature_names.push_back("f" + std::to_string(j));
  std::uniform_int_distribution<Eigen::Index> pick(0, arms - 1);
  for (Eigen::Index t = 0; t < horizon; ++t) d.steps.push_back({ContextSet(random_matrix(arms, k, rng)), pick(rng)});
  return d;
}

inline RewardChain random_chain(Eigen::Index horizon, Eigen::Index k, Rng& rng) {
  return {random_vector(horizon, rng), random_matrix(horizon, k, rng, -1.0, 1.0)};
}

/// Mean and variance of an unnormalized log-density on a uniform grid.
struct GridMoments {
  double mean = 0.0;
  double variance = 0.0;
};

inline GridMoments grid_moments_1d(const std::function<double(double)>& log_density, double lo, double hi,
                                   std::size_t points) {
  std::vector<double> xs(points), lp(points);
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points; ++i) {
    xs[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    lp[i] = log_density(xs[i]);
    peak = std::max(peak, lp[i]);
  }
  double z = 0.0, m1 = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < points; ++i) {
    const double w = std::exp(lp[i] - peak);
    z += w;
    m1 += w * xs[i];
    m2 += w * xs[i] * xs[i];
  }
  GridMoments g;
  g.mean = m1 / z;
  g.variance = m2 / z - g.mean * g.mean;
  return g;
}

/// |a − b| ≤ tol·(|b| + scale); `scale` keeps the check meaningful for values near zero.
inline bool close_relative(double a, double b, double tol, double scale) {
  return std::abs(a - b) <= tol * (std::abs(b) + scale);
}

/// Unnormalized log conditional of r_t built from the plain belief recursion:
/// log N(r_t; ⟨ρ*, x_t⟩, σ²) + Σ_{τ>t} log N(ρ_τ; μ_τ, Σ_τ).
inline double reward_log_density(Eigen::Index t, double r, RewardChain chain, const RewardParameter& rho_star,
                                 const GaussianBelief& beta1, const Matrix& x, double sigma,
                                 MeanUpdateRule rule = MeanUpdateRule::AsWritten) {
  chain.rewards(t) = r;
  const auto beliefs = belief_trajectory(beta1, x, chain.rewards, sigma, rule);
  double lp = log_normal_pdf(r, rho_star.dot(x.row(t)), sigma * sigma);
  for (Eigen::Index tau = t + 1; tau < x.rows(); ++tau) {
    const auto& b = beliefs[static_cast<std::size_t>(tau)];
    lp += log_gaussian_pdf(chain.rhos.row(tau).transpose(), b.mean, cholesky_lower(b.covariance));
  }
  return lp;
}

/// Unnormalized log conditional of ν_t: log N(ν_t; 0, Σ_B) + Σ_{τ≥t} log N(ρ_τ; β_τ, Σ_P).
inline double nu_log_density(Eigen::Index t, const Vector& value, IncrementChain chain, const Matrix& sigma_p,
                             const Matrix& sigma_b) {
  chain.nu.row(t) = value.transpose();
  const Matrix beliefs = chain.beliefs();
  const Matrix lp_chol = cholesky_lower(sigma_p);
  double lp = log_gaussian_pdf(value, Vector::Zero(value.size()), cholesky_lower(sigma_b));
  for (Eigen::Index tau = t; tau < chain.nu.rows(); ++tau)
    lp += log_gaussian_pdf(chain.rhos.row(tau).transpose(), beliefs.row(tau).transpose(), lp_chol);
  return lp;
}

struct GridMoments2 {
  Vector mean;
  Matrix covariance;
};

inline GridMoments2 grid_moments_2d(const std::function<double(const Vector&)>& log_density, const Vector& center,
                             const Vector& half_width, int points) {
  std::vector<double> lp;
  std::vector<Vector> xs;
  double peak = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < points; ++i) {
    for (int j = 0; j < points; ++j) {
      Vector v(2);
      v(0) = center(0) - half_width(0) + 2.0 * half_width(0) * i / (points - 1);
      v(1) = center(1) - half_width(1) + 2.0 * half_width(1) * j / (points - 1);
      xs.push_back(v);
      lp.push_back(log_density(v));
      peak = std::max(peak, lp.back());
    }
  }
  double z = 0.0;
  Vector m1 = Vector::Zero(2);
  Matrix m2 = Matrix::Zero(2, 2);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double w = std::exp(lp[i] - peak);
    z += w;
    m1 += w * xs[i];
    m2 += w * xs[i] * xs[i].transpose();
  }
  GridMoments2 g;
  g.mean = m1 / z;
  g.covariance = m2 / z - g.mean * g.mean.transpose();
  return g;
}

inline IncrementChain random_increments(Eigen::Index horizon, Eigen::Index k, Rng& rng) {
  return {random_matrix(horizon, k, rng, -0.5, 0.5), random_matrix(horizon, k, rng, -1.0, 1.0)};
}

/// Batch form: precision Σ₁⁻¹ + Σ xxᵀ/σ², information Σ₁⁻¹μ₁ + c Σ r x.
inline GaussianBelief batch_posterior(const GaussianBelief& b1, const Matrix& x, const Vector& r, double sigma,
                               MeanUpdateRule rule) {
  const double c = rule == MeanUpdateRule::AsWritten ? 1.0 : 1.0 / (sigma * sigma);
  const Matrix p1 = b1.covariance.inverse();
  const Matrix precision = p1 + x.transpose() * x / (sigma * sigma);
  const Vector info = p1 * b1.mean + c * x.transpose() * r;
  const Matrix cov = precision.inverse();
  return {cov * info, cov};
}

/// Batch-means standard error of the sample mean of an autocorrelated series.
inline double batch_standard_error(const std::vector<double>& xs, std::size_t batches = 50) {
  const std::size_t size = xs.size() / batches;
  std::vector<double> means;
  for (std::size_t b = 0; b < batches; ++b) {
    double s = 0.0;
    for (std::size_t i = b * size; i < (b + 1) * size; ++i) s += xs[i];
    means.push_back(s / static_cast<double>(size));
  }
  const Summary s = summarize(means);
  return s.std / std::sqrt(static_cast<double>(batches));
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("icb_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace icb::test
