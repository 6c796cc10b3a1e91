#pragma once

#include <string>

#include "qgibbs/loss.hpp"
#include "qgibbs/prior.hpp"

namespace qgibbs {

/// How the empirical risk enters the exponent of the Gibbs posterior.
///   mean: exp(-lambda * r_n(theta))          (r_n averaged over rows)
///   sum:  exp(-lambda * n * r_n(theta))      (plain sum of row losses)
enum class RiskScaling { mean, sum };

RiskScaling parse_risk_scaling(const std::string& name);
std::string to_string(RiskScaling scaling);

struct GibbsConfig {
  QuantileLevel tau{0.5};
  double lambda = 1.0;
  PriorConfig prior;
  RiskScaling scaling = RiskScaling::mean;

  void validate() const;
};

/// Gibbs posterior rho(theta) ~ exp(-lambda * r_n(theta)) * pi(theta).
/// Samplers ascend log_density_grad, i.e. descend the potential
/// U(theta) = lambda * r_n(theta) - log pi(theta).
class PosteriorTarget {
 public:
  PosteriorTarget(Dataset data, GibbsConfig cfg);

  const Dataset& data() const { return data_; }
  const GibbsConfig& config() const { return cfg_; }
  Index dim() const { return data_.d(); }

  /// Multiplier actually applied to r_n (lambda, or lambda * n).
  double risk_weight() const;

  double log_density_unnorm(const Vector& theta) const;
  Vector log_density_grad(const Vector& theta) const;
  bool in_support(const Vector& theta) const;

  /// 0.5 / (w * mean_i ||x_i||^2 + 1 / varsigma^2) with w = risk_weight().
  double default_step_size() const;

 private:
  Dataset data_;
  GibbsConfig cfg_;
};

}  // namespace qgibbs
