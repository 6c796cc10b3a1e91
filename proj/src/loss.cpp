#include "qgibbs/loss.hpp"

#include <cmath>
#include <string>

#include "qgibbs/error.hpp"

namespace qgibbs {

QuantileLevel::QuantileLevel(double tau) : tau_(tau) {
  if (!(tau > 0.0 && tau < 1.0)) {
    throw ConfigError("tau must lie in (0, 1), got " + std::to_string(tau));
  }
}

Dataset::Dataset(Matrix x, Vector y) : x_(std::move(x)), y_(std::move(y)) {
  if (x_.rows() < 1 || x_.cols() < 1) {
    throw ShapeError("dataset needs at least one row and one column");
  }
  if (x_.rows() != y_.size()) {
    throw ShapeError("design has " + std::to_string(x_.rows()) +
                     " rows but response has " + std::to_string(y_.size()));
  }
  if (!x_.allFinite() || !y_.allFinite()) {
    throw DomainError("dataset contains non-finite entries");
  }
}

Dataset Dataset::rows(const std::vector<Index>& idx) const {
  Matrix x(static_cast<Index>(idx.size()), d());
  Vector y(static_cast<Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    x.row(static_cast<Index>(k)) = x_.row(idx[k]);
    y[static_cast<Index>(k)] = y_[idx[k]];
  }
  return Dataset(std::move(x), std::move(y));
}

double pinball_loss(double y, double u, QuantileLevel tau) {
  if (!std::isfinite(y) || !std::isfinite(u)) {
    throw DomainError("pinball_loss: non-finite argument");
  }
  const double r = y - u;
  return r * (tau.value() - (y <= u ? 1.0 : 0.0));
}

double stable_sum(const Vector& values) {
  if (values.size() <= 10000) {
    double s = 0.0;
    for (Index i = 0; i < values.size(); ++i) s += values[i];
    return s;
  }
  double s = 0.0;
  double c = 0.0;
  for (Index i = 0; i < values.size(); ++i) {
    const double yk = values[i] - c;
    const double t = s + yk;
    c = (t - s) - yk;
    s = t;
  }
  return s;
}

void check_theta(const Dataset& data, const Vector& theta) {
  if (theta.size() != data.d()) {
    throw ShapeError("theta has length " + std::to_string(theta.size()) +
                     ", expected " + std::to_string(data.d()));
  }
  if (!theta.allFinite()) throw DomainError("theta has non-finite entries");
}

double empirical_risk(const Dataset& data, const Vector& theta,
                      QuantileLevel tau) {
  check_theta(data, theta);
  const Vector fitted = data.x() * theta;
  const double t = tau.value();
  Vector losses(data.n());
  for (Index i = 0; i < data.n(); ++i) {
    const double r = data.y()[i] - fitted[i];
    losses[i] = r * (t - (r <= 0.0 ? 1.0 : 0.0));
  }
  return stable_sum(losses) / static_cast<double>(data.n());
}

Vector risk_subgradient(const Dataset& data, const Vector& theta,
                        QuantileLevel tau) {
  check_theta(data, theta);
  const Vector fitted = data.x() * theta;
  const double t = tau.value();
  Vector w(data.n());
  for (Index i = 0; i < data.n(); ++i) {
    w[i] = data.y()[i] <= fitted[i] ? 1.0 - t : -t;
  }
  return data.x().transpose() * w / static_cast<double>(data.n());
}

}  // namespace qgibbs
