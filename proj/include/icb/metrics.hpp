#pragma once

#include <cmath>
#include <vector>

#include "icb/linalg.hpp"

namespace icb {

/// Mean absolute entrywise difference (1/k)·‖a − b‖₁.
inline double normalized_l1_error(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("normalized_l1_error: dimension mismatch");
  if (a.size() == 0) throw std::invalid_argument("normalized_l1_error: empty vectors");
  return (a - b).cwiseAbs().sum() / static_cast<double>(a.size());
}

/// Σ(v − v̄)², accumulated relative to the first value so identical inputs give exactly 0.
inline double shifted_sum_of_squares(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  const double shift = values.front();
  double mean = 0.0;
  for (double v : values) mean += v - shift;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - shift - mean) * (v - shift - mean);
  return ss;
}

struct ErrorSeries {
  std::vector<double> per_time;
  double mean = 0.0;
  double variation = 0.0;  // population standard deviation across t

  static ErrorSeries from_values(std::vector<double> values) {
    ErrorSeries s;
    s.per_time = std::move(values);
    if (s.per_time.empty()) return s;
    const double n = static_cast<double>(s.per_time.size());
    for (double v : s.per_time) s.mean += v;
    s.mean /= n;
    s.variation = std::sqrt(shifted_sum_of_squares(s.per_time) / n);
    return s;
  }
};

/// Per-time normalized L1 error between true and estimated belief means
/// (rows of T×k matrices).
inline ErrorSeries belief_error_series(const Matrix& true_means, const Matrix& estimated_means) {
  if (true_means.rows() != estimated_means.rows()) throw std::invalid_argument("belief_error_series: length mismatch");
  if (true_means.cols() != estimated_means.cols()) throw std::invalid_argument("belief_error_series: dimension mismatch");
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(true_means.rows()));
  for (Eigen::Index t = 0; t < true_means.rows(); ++t)
    values.push_back(normalized_l1_error(true_means.row(t).transpose(), estimated_means.row(t).transpose()));
  return ErrorSeries::from_values(std::move(values));
}

/// |β(i)| / Σ_j |β(j)|.
inline Vector feature_importance(const Vector& beta_mean) {
  const double total = beta_mean.cwiseAbs().sum();
  if (!(total > 0.0)) throw std::domain_error("feature importance is undefined for an all-zero belief");
  return beta_mean.cwiseAbs() / total;
}

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for a single value
};

inline Summary summarize(const std::vector<double>& values) {
  Summary s;
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  for (double v : values) s.mean += v;
  s.mean /= n;
  if (values.size() > 1) s.std = std::sqrt(shifted_sum_of_squares(values) / (n - 1.0));
  return s;
}

}  // namespace icb
