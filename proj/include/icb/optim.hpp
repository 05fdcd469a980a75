#pragma once

#include <cmath>

#include "icb/linalg.hpp"

namespace icb {

/// RMSprop for gradient *ascent*: θ += η g / (√E[g²] + ε).
class RmsProp {
 public:
  RmsProp(double learning_rate = 0.1, double discount = 0.9, double epsilon = 1e-8)
      : lr_(learning_rate), discount_(discount), eps_(epsilon) {}

  Vector step(const Vector& params, const Vector& grad) {
    if (!grad.allFinite()) throw NumericalError("non-finite gradient");
    if (mean_square_.size() != grad.size()) mean_square_ = Vector::Zero(grad.size());
    mean_square_ = discount_ * mean_square_ + (1.0 - discount_) * grad.cwiseAbs2();
    return params + lr_ * grad.cwiseQuotient((mean_square_.cwiseSqrt().array() + eps_).matrix());
  }

  double learning_rate() const { return lr_; }
  const Vector& mean_square() const { return mean_square_; }

 private:
  double lr_;
  double discount_;
  double eps_;
  Vector mean_square_;
};

/// Adam for gradient *descent*, with bias correction.
class Adam {
 public:
  Adam(double learning_rate = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8)
      : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon) {}

  Vector step(const Vector& params, const Vector& grad) {
    if (!grad.allFinite()) throw NumericalError("non-finite gradient");
    if (m_.size() != grad.size()) {
      m_ = Vector::Zero(grad.size());
      v_ = Vector::Zero(grad.size());
      t_ = 0;
    }
    ++t_;
    m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
    v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    const Vector m_hat = m_ / c1;
    const Vector v_hat = v_ / c2;
    return params - lr_ * m_hat.cwiseQuotient((v_hat.cwiseSqrt().array() + eps_).matrix());
  }

 private:
  double lr_;
  double beta1_;
  double beta2_;
  double eps_;
  Vector m_;
  Vector v_;
  long t_ = 0;
};

}  // namespace icb
