#pragma once

// Synthetic organ-allocation-style context stream. The feature generators
// are stand-ins with plausible ranges; they are not fitted to any registry.

#include <cstdint>
#include <string>
#include <vector>

#include "icb/bandit.hpp"

namespace icb {

struct FeatureGenerator {
  enum class Kind { Bernoulli, Uniform };

  std::string name;
  Kind kind = Kind::Uniform;
  double p = 0.5;   // Bernoulli
  double lo = 0.0;  // Uniform
  double hi = 1.0;

  static FeatureGenerator bernoulli(std::string name, double p) {
    return {std::move(name), Kind::Bernoulli, p, 0.0, 1.0};
  }
  static FeatureGenerator uniform(std::string name, double lo, double hi) {
    return {std::move(name), Kind::Uniform, 0.5, lo, hi};
  }

  static Kind parse_kind(const std::string& tag) {
    if (tag == "bernoulli") return Kind::Bernoulli;
    if (tag == "uniform") return Kind::Uniform;
    throw std::invalid_argument("unknown feature generator '" + tag + "'");
  }
  std::string kind_tag() const { return kind == Kind::Bernoulli ? "bernoulli" : "uniform"; }

  void validate() const {
    if (kind == Kind::Bernoulli && !(p >= 0.0 && p <= 1.0))
      throw std::invalid_argument("bernoulli p must lie in [0,1] for feature '" + name + "'");
    if (kind == Kind::Uniform && !(lo <= hi))
      throw std::invalid_argument("uniform bounds must satisfy lo <= hi for feature '" + name + "'");
  }

  bool operator==(const FeatureGenerator&) const = default;
};

/// ABO Mismatch ~ Bernoulli(0.1), Age ~ U(0,1).
inline std::vector<FeatureGenerator> two_feature_preset() {
  return {FeatureGenerator::bernoulli("ABO Mismatch", 0.1), FeatureGenerator::uniform("Age", 0.0, 1.0)};
}

/// Eight-feature preset. Rates for the binary indicators are synthetic guesses.
inline std::vector<FeatureGenerator> eight_feature_preset() {
  return {FeatureGenerator::bernoulli("ABO Mismatch", 0.1),
          FeatureGenerator::uniform("Age", 0.0, 1.0),
          FeatureGenerator::uniform("Creatinine", 0.0, 1.0),
          FeatureGenerator::bernoulli("Dialysis", 0.15),
          FeatureGenerator::uniform("INR", 0.0, 1.0),
          FeatureGenerator::bernoulli("Life Support", 0.05),
          FeatureGenerator::uniform("Bilirubin", 0.0, 1.0),
          FeatureGenerator::uniform("Weight Difference", 0.0, 1.0)};
}

struct SyntheticEnvConfig {
  Eigen::Index horizon = 250;
  Eigen::Index arms_per_step = 3;
  std::vector<FeatureGenerator> features = two_feature_preset();
  std::uint64_t seed = 0;

  Eigen::Index dim() const { return static_cast<Eigen::Index>(features.size()); }

  std::vector<std::string> feature_names() const {
    std::vector<std::string> out;
    for (const auto& f : features) out.push_back(f.name);
    return out;
  }

  void validate() const {
    if (horizon < 1) throw std::invalid_argument("environment horizon T must be >= 1");
    if (arms_per_step < 2) throw std::invalid_argument("arms_per_step must be >= 2");
    if (features.empty()) throw std::invalid_argument("environment needs at least one feature");
    for (const auto& f : features) f.validate();
  }

  bool operator==(const SyntheticEnvConfig&) const = default;
};

inline std::vector<ContextSet> generate_contexts(const SyntheticEnvConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<ContextSet> out;
  out.reserve(static_cast<std::size_t>(cfg.horizon));
  for (Eigen::Index t = 0; t < cfg.horizon; ++t) {
    Matrix arms(cfg.arms_per_step, cfg.dim());
    for (Eigen::Index a = 0; a < cfg.arms_per_step; ++a) {
      for (Eigen::Index j = 0; j < cfg.dim(); ++j) {
        const auto& f = cfg.features[static_cast<std::size_t>(j)];
        const double u = unit(rng);
        arms(a, j) = f.kind == FeatureGenerator::Kind::Bernoulli ? (u < f.p ? 1.0 : 0.0)
                                                                 : f.lo + (f.hi - f.lo) * u;
      }
    }
    out.emplace_back(std::move(arms));
  }
  return out;
}

}  // namespace icb
