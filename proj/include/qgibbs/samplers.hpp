#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "qgibbs/linalg.hpp"

namespace qgibbs {

using LogDensityFn = std::function<double(const Vector&)>;
using GradientFn = std::function<Vector(const Vector&)>;
using SupportFn = std::function<bool(const Vector&)>;

struct SamplerConfig {
  double eta = 1e-3;
  std::int64_t n_iter = 30000;
  std::int64_t burn_in = 500;
  std::int64_t thin = 1;
  std::uint64_t seed = 0;
  bool adapt = false;
  double target_accept = 0.5;
  /// When false only the running sum is kept; posterior_mean still works but
  /// chain_summary and the chain dump need stored draws.
  bool store_draws = true;

  void validate() const;
  std::int64_t kept_count() const { return (n_iter - burn_in) / thin; }
};

struct Chain {
  Matrix draws;  // kept iterations x d (empty when draws are not stored)
  Vector draw_sum;
  std::int64_t kept = 0;
  std::int64_t burn_in = 0;
  std::int64_t thin = 1;
  double accept_rate = 1.0;
  double final_eta = 0.0;
  std::uint64_t seed = 0;

  /// 1-based iteration number of the k-th kept draw.
  std::int64_t iteration_of(std::int64_t k) const {
    return burn_in + (k + 1) * thin;
  }
};

/// One Langevin move: theta + eta * grad + sqrt(2 eta) * noise.
Vector langevin_step(const Vector& theta, const Vector& grad, double eta,
                     const Vector& noise);

/// Unadjusted Langevin chain with constant step size. When `support` is given,
/// moves that leave it are rejected and the current state is repeated.
Chain lmc_run(const GradientFn& grad, Index d, const Vector& init,
              const SamplerConfig& cfg, const SupportFn& support = {});

/// log of the Metropolis-Hastings ratio for a Langevin proposal
/// current -> proposal.
double mala_log_accept_ratio(double logp_current, double logp_proposal,
                             const Vector& current, const Vector& proposal,
                             const Vector& grad_current,
                             const Vector& grad_proposal, double eta);

/// Metropolis-adjusted Langevin chain. With cfg.adapt the step size is tuned
/// toward cfg.target_accept during burn-in and frozen afterwards.
Chain mala_run(const LogDensityFn& logp, const GradientFn& grad, Index d,
               const Vector& init, const SamplerConfig& cfg);

Vector posterior_mean(const Chain& chain);

struct ChainSummary {
  Vector mean;
  Vector sd;
  Vector lower;
  Vector upper;
  double level = 0.9;
  double accept_rate = 1.0;
  double final_eta = 0.0;
};

/// Per-coordinate mean, sd and equal-tailed credible interval at `level`.
ChainSummary chain_summary(const Chain& chain, double level = 0.9);

/// CSV: iter,theta_1,...,theta_d; one row per kept draw.
void write_chain_csv(std::ostream& os, const Chain& chain);

/// Sample quantile with linear interpolation between order statistics.
double empirical_quantile(std::vector<double> values, double p);

}  // namespace qgibbs
