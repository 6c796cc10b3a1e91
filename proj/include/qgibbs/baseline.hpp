#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qgibbs/loss.hpp"

namespace qgibbs {

/// l1-penalized quantile regression on a Huberized check loss.
struct LassoConfig {
  QuantileLevel tau{0.5};
  double penalty = 0.0;
  double gamma = 1e-2;  // smoothing half-width
  int max_iter = 5000;
  double tol = 1e-8;    // relative objective change

  void validate() const;
};

struct SmoothedLoss {
  double value;
  double du;  // derivative with respect to the prediction u
};

/// Huberized pinball loss; quadratic on -gamma(1-tau) < y - u < gamma tau,
/// linear with the check-loss slopes outside. Within gamma/2 of pinball_loss.
SmoothedLoss smoothed_pinball(double y, double u, QuantileLevel tau,
                              double gamma);

/// (1/n) sum smoothed_pinball + penalty * ||theta||_1
double lasso_objective(const Dataset& data, const LassoConfig& cfg,
                       const Vector& theta);

/// Gradient of the smooth part of lasso_objective.
Vector smoothed_risk_grad(const Dataset& data, const Vector& theta,
                          QuantileLevel tau, double gamma);

/// sign(v) * max(|v| - threshold, 0), elementwise.
Vector soft_threshold(const Vector& v, double threshold);

/// One proximal gradient step with step size `step`.
Vector proximal_step(const Vector& theta, const Vector& smooth_grad,
                     double step, double penalty);

/// Monotone accelerated proximal gradient with backtracking. The objective
/// never increases from one iterate to the next.
Vector fit_quantile_lasso(const Dataset& data, const LassoConfig& cfg,
                          const Vector& init);

/// 1e-2 * sd(y), floored at a tiny positive value.
double default_gamma(const Dataset& data);

/// `count` log-spaced penalties over [1e-3, 1] * max_j |<x_j, g0>| / n, where
/// g0 is the smoothed loss derivative at theta = 0. Ascending.
std::vector<double> default_penalty_grid(const Dataset& data, QuantileLevel tau,
                                         double gamma, int count = 30);

struct CvResult {
  double best_penalty = 0.0;
  Vector theta;
  std::vector<double> cv_loss;  // mean held-out pinball loss per grid point
};

/// K-fold cross-validation over an ascending penalty grid. Folds come from a
/// seeded shuffle; ties go to the larger penalty; refit on all rows.
CvResult cv_quantile_lasso(const Dataset& data, QuantileLevel tau,
                           std::span<const double> penalty_grid, int folds,
                           std::uint64_t seed, double gamma);

}  // namespace qgibbs
