#pragma once

#include <string>
#include <vector>

#include "icb/bandit.hpp"

namespace icb {

/// One observed decision: the arms on offer and the index that was chosen.
struct Step {
  ContextSet context;
  Eigen::Index chosen = 0;

  bool operator==(const Step&) const = default;
};

/// Observational dataset D = {x_{1:T}, a_{1:T}}; step t (1-based) lives at steps[t-1].
struct Dataset {
  std::vector<Step> steps;
  std::vector<std::string> feature_names;

  Eigen::Index horizon() const { return static_cast<Eigen::Index>(steps.size()); }
  Eigen::Index dim() const {
    if (!feature_names.empty()) return static_cast<Eigen::Index>(feature_names.size());
    return steps.empty() ? 0 : steps.front().context.dim();
  }

  void validate() const {
    const Eigen::Index k = dim();
    if (k < 1) throw std::invalid_argument("dataset feature dimension must be >= 1");
    for (std::size_t i = 0; i < steps.size(); ++i) {
      const auto& s = steps[i];
      if (s.context.dim() != k)
        throw std::invalid_argument("step " + std::to_string(i + 1) + " has inconsistent feature dimension");
      if (s.chosen < 0 || s.chosen >= s.context.num_arms())
        throw std::invalid_argument("step " + std::to_string(i + 1) + " chosen index out of range");
    }
  }

  /// Rows x_t(a_t) of the chosen arms, T×k.
  Matrix chosen_features() const {
    Matrix out(horizon(), dim());
    for (Eigen::Index t = 0; t < horizon(); ++t) {
      const auto& s = steps[static_cast<std::size_t>(t)];
      out.row(t) = s.context.arms().row(s.chosen);
    }
    return out;
  }

  /// Contiguous sub-dataset covering 0-based steps [begin, end).
  Dataset slice(std::size_t begin, std::size_t end) const {
    Dataset out;
    out.feature_names = feature_names;
    out.steps.assign(steps.begin() + static_cast<std::ptrdiff_t>(begin),
                     steps.begin() + static_cast<std::ptrdiff_t>(end));
    return out;
  }

  bool operator==(const Dataset&) const = default;
};

}  // namespace icb
