#include "qgibbs/posterior.hpp"

#include <cmath>

#include "qgibbs/error.hpp"

namespace qgibbs {

RiskScaling parse_risk_scaling(const std::string& name) {
  if (name == "mean") return RiskScaling::mean;
  if (name == "sum") return RiskScaling::sum;
  throw ConfigError("scaling must be 'mean' or 'sum', got '" + name + "'");
}

std::string to_string(RiskScaling scaling) {
  return scaling == RiskScaling::mean ? "mean" : "sum";
}

void GibbsConfig::validate() const {
  // lambda = 0 is accepted so the tempering limit (prior only) can be probed.
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ConfigError("lambda must be a nonnegative finite number");
  }
  prior.validate();
}

PosteriorTarget::PosteriorTarget(Dataset data, GibbsConfig cfg)
    : data_(std::move(data)), cfg_(cfg) {
  cfg_.validate();
}

double PosteriorTarget::risk_weight() const {
  return cfg_.scaling == RiskScaling::sum
             ? cfg_.lambda * static_cast<double>(data_.n())
             : cfg_.lambda;
}

double PosteriorTarget::log_density_unnorm(const Vector& theta) const {
  check_theta(data_, theta);
  const double lp = log_prior_unnorm(theta, cfg_.prior);
  if (std::isinf(lp)) return lp;
  return -risk_weight() * empirical_risk(data_, theta, cfg_.tau) + lp;
}

Vector PosteriorTarget::log_density_grad(const Vector& theta) const {
  check_theta(data_, theta);
  return -risk_weight() * risk_subgradient(data_, theta, cfg_.tau) +
         log_prior_grad(theta, cfg_.prior);
}

bool PosteriorTarget::in_support(const Vector& theta) const {
  return cfg_.prior.in_support(theta);
}

double PosteriorTarget::default_step_size() const {
  const double mean_sq_norm =
      data_.x().rowwise().squaredNorm().mean();
  const double s = cfg_.prior.varsigma;
  return 0.5 / (risk_weight() * mean_sq_norm + 1.0 / (s * s));
}

}  // namespace qgibbs
