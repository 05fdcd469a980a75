#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace icb {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Rng = std::mt19937_64;

/// Raised when a numerical precondition (positive definiteness, finite
/// values) fails at runtime. The CLI maps it to exit status 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline bool all_finite(const Eigen::Ref<const Matrix>& m) {
  return m.allFinite();
}

inline double max_asymmetry(const Matrix& m) {
  return (m - m.transpose()).cwiseAbs().maxCoeff();
}

inline Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

/// Lower Cholesky factor; throws NumericalError if `m` is not positive definite.
inline Matrix cholesky_lower(const Matrix& m, const char* what = "matrix") {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) {
    throw NumericalError(std::string(what) + " is not positive definite");
  }
  return llt.matrixL();
}

inline Matrix spd_inverse(const Matrix& m, const char* what = "matrix") {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) {
    throw NumericalError(std::string(what) + " is not positive definite");
  }
  return symmetrized(llt.solve(Matrix::Identity(m.rows(), m.cols())));
}

inline Vector standard_normal_vector(Eigen::Index n, Rng& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = z(rng);
  return v;
}

/// Draw from N(mean, L Lᵀ) given the lower Cholesky factor L.
inline Vector sample_gaussian(const Vector& mean, const Matrix& chol_lower, Rng& rng) {
  return mean + chol_lower * standard_normal_vector(mean.size(), rng);
}

inline double log_normal_pdf(double x, double mean, double variance) {
  const double d = x - mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * variance) + d * d / variance);
}

/// log N(x; mean, Σ) with Σ given through its lower Cholesky factor.
inline double log_gaussian_pdf(const Vector& x, const Vector& mean, const Matrix& chol_lower) {
  const Vector z =
      chol_lower.triangularView<Eigen::Lower>().solve(x - mean);
  const double log_det = 2.0 * chol_lower.diagonal().array().log().sum();
  return -0.5 * (static_cast<double>(x.size()) * std::log(2.0 * std::numbers::pi) + log_det +
                 z.squaredNorm());
}

}  // namespace icb
