#pragma once

#include <vector>

#include "qgibbs/linalg.hpp"

namespace qgibbs {

/// Quantile level tau, strictly inside (0, 1).
class QuantileLevel {
 public:
  explicit QuantileLevel(double tau);

  double value() const { return tau_; }

 private:
  double tau_;
};

/// Design matrix (n x d) and response (n). Entries are finite, n, d >= 1.
class Dataset {
 public:
  Dataset(Matrix x, Vector y);

  const Matrix& x() const { return x_; }
  const Vector& y() const { return y_; }
  Index n() const { return x_.rows(); }
  Index d() const { return x_.cols(); }

  /// Rows selected by index, in the given order.
  Dataset rows(const std::vector<Index>& idx) const;

 private:
  Matrix x_;
  Vector y_;
};

/// Check loss (y - u) * (tau - 1{y <= u}).
double pinball_loss(double y, double u, QuantileLevel tau);

/// Mean pinball loss of the linear predictor x * theta.
double empirical_risk(const Dataset& data, const Vector& theta,
                      QuantileLevel tau);

/// Gradient of empirical_risk where it exists. At a kink (y_i == x_i'theta)
/// the (1 - tau) branch is taken, giving a valid subgradient.
Vector risk_subgradient(const Dataset& data, const Vector& theta,
                        QuantileLevel tau);

/// Sum of values; compensated (Kahan) once the length exceeds 1e4.
double stable_sum(const Vector& values);

void check_theta(const Dataset& data, const Vector& theta);

}  // namespace qgibbs
