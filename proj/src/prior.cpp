#include "qgibbs/prior.hpp"

#include <cmath>
#include <random>

#include "qgibbs/error.hpp"

namespace qgibbs {

void PriorConfig::validate() const {
  if (!(varsigma > 0.0) || !std::isfinite(varsigma)) {
    throw ConfigError("varsigma must be positive and finite");
  }
  if (!(c1 > 0.0)) throw ConfigError("c1 must be positive");
}

bool PriorConfig::in_support(const Vector& theta) const {
  return std::isinf(c1) || theta.lpNorm<1>() < c1;
}

double log_prior_unnorm(const Vector& theta, const PriorConfig& cfg) {
  if (!theta.allFinite()) throw DomainError("log_prior_unnorm: non-finite theta");
  if (std::isfinite(cfg.c1) && theta.lpNorm<1>() > cfg.c1) {
    return -std::numeric_limits<double>::infinity();
  }
  const double s2 = cfg.varsigma * cfg.varsigma;
  double acc = 0.0;
  for (Index i = 0; i < theta.size(); ++i) {
    acc += std::log(s2 + theta[i] * theta[i]);
  }
  return -2.0 * acc;
}

Vector log_prior_grad(const Vector& theta, const PriorConfig& cfg) {
  if (!theta.allFinite()) throw DomainError("log_prior_grad: non-finite theta");
  if (std::isfinite(cfg.c1) && theta.lpNorm<1>() >= cfg.c1) {
    throw DomainError("log_prior_grad: theta is not inside the l1 ball");
  }
  const double s2 = cfg.varsigma * cfg.varsigma;
  return theta.unaryExpr([s2](double t) { return -4.0 * t / (s2 + t * t); });
}

Vector sample_prior(Index d, const PriorConfig& cfg, Rng& rng) {
  cfg.validate();
  std::student_t_distribution<double> t3(3.0);
  const double scale = cfg.varsigma / std::sqrt(3.0);
  constexpr int kMaxAttempts = 100000;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Vector theta(d);
    for (Index i = 0; i < d; ++i) theta[i] = scale * t3(rng);
    if (cfg.in_support(theta)) return theta;
  }
  throw DomainError("sample_prior: l1 ball too small for rejection sampling");
}

}  // namespace qgibbs
