#pragma once

#include <limits>

#include "qgibbs/linalg.hpp"
#include "qgibbs/rng.hpp"

namespace qgibbs {

/// Scaled Student-t sparsity prior, density proportional to
/// prod_i (varsigma^2 + theta_i^2)^-2 on the l1 ball of radius c1.
struct PriorConfig {
  double varsigma = 1.0;
  double c1 = std::numeric_limits<double>::infinity();

  void validate() const;
  bool in_support(const Vector& theta) const;
};

/// log pi(theta) up to an additive constant; -inf outside the l1 ball.
double log_prior_unnorm(const Vector& theta, const PriorConfig& cfg);

/// Gradient of log_prior_unnorm. Throws DomainError on or outside the
/// boundary of a finite l1 ball.
Vector log_prior_grad(const Vector& theta, const PriorConfig& cfg);

/// Exact draw: each coordinate is (varsigma / sqrt(3)) * t_3. A finite c1 is
/// handled by rejecting whole vectors that leave the ball.
Vector sample_prior(Index d, const PriorConfig& cfg, Rng& rng);

}  // namespace qgibbs
