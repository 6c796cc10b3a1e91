#include "qgibbs/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "qgibbs/error.hpp"
#include "qgibbs/rng.hpp"

namespace qgibbs {

void LassoConfig::validate() const {
  if (!(penalty >= 0.0) || !std::isfinite(penalty)) {
    throw ConfigError("penalty must be nonnegative and finite");
  }
  if (!(gamma > 0.0)) throw ConfigError("gamma must be positive");
  if (max_iter < 1) throw ConfigError("max_iter must be positive");
  if (!(tol > 0.0)) throw ConfigError("tol must be positive");
}

SmoothedLoss smoothed_pinball(double y, double u, QuantileLevel tau,
                              double gamma) {
  const double t = tau.value();
  const double r = y - u;
  if (r >= gamma * t) return {t * r - gamma * t * t / 2.0, -t};
  if (r <= -gamma * (1.0 - t)) {
    return {(t - 1.0) * r - gamma * (1.0 - t) * (1.0 - t) / 2.0, 1.0 - t};
  }
  return {r * r / (2.0 * gamma), -r / gamma};
}

namespace {

// Value and gradient of the smooth part at theta.
double smooth_part(const Dataset& data, const Vector& theta, QuantileLevel tau,
                   double gamma, Vector* grad) {
  const Vector fitted = data.x() * theta;
  Vector values(data.n());
  Vector du(data.n());
  for (Index i = 0; i < data.n(); ++i) {
    const SmoothedLoss s = smoothed_pinball(data.y()[i], fitted[i], tau, gamma);
    values[i] = s.value;
    du[i] = s.du;
  }
  const double n = static_cast<double>(data.n());
  if (grad != nullptr) *grad = data.x().transpose() * du / n;
  return stable_sum(values) / n;
}

double smooth_value(const Dataset& data, const Vector& theta, QuantileLevel tau,
                    double gamma) {
  return smooth_part(data, theta, tau, gamma, nullptr);
}

}  // namespace

double lasso_objective(const Dataset& data, const LassoConfig& cfg,
                       const Vector& theta) {
  check_theta(data, theta);
  return smooth_value(data, theta, cfg.tau, cfg.gamma) +
         cfg.penalty * theta.lpNorm<1>();
}

Vector smoothed_risk_grad(const Dataset& data, const Vector& theta,
                          QuantileLevel tau, double gamma) {
  check_theta(data, theta);
  Vector g;
  smooth_part(data, theta, tau, gamma, &g);
  return g;
}

Vector soft_threshold(const Vector& v, double threshold) {
  return v.unaryExpr([threshold](double a) {
    const double m = std::abs(a) - threshold;
    return m > 0.0 ? std::copysign(m, a) : 0.0;
  });
}

Vector proximal_step(const Vector& theta, const Vector& smooth_grad,
                     double step, double penalty) {
  return soft_threshold(theta - step * smooth_grad, step * penalty);
}

Vector fit_quantile_lasso(const Dataset& data, const LassoConfig& cfg,
                          const Vector& init) {
  cfg.validate();
  check_theta(data, init);

  const auto objective = [&](double smooth, const Vector& th) {
    return smooth + cfg.penalty * th.lpNorm<1>();
  };

  Vector x = init;
  double fx = objective(smooth_value(data, x, cfg.tau, cfg.gamma), x);
  Vector y = x;
  double t = 1.0;
  double lipschitz = 1.0;
  Vector gy;

  for (int iter = 0; iter < cfg.max_iter; ++iter) {
    const double fy = smooth_part(data, y, cfg.tau, cfg.gamma, &gy);
    Vector z;
    double fz_smooth = 0.0;
    for (;;) {
      z = proximal_step(y, gy, 1.0 / lipschitz, cfg.penalty);
      fz_smooth = smooth_value(data, z, cfg.tau, cfg.gamma);
      const Vector diff = z - y;
      const double model =
          fy + gy.dot(diff) + 0.5 * lipschitz * diff.squaredNorm();
      if (fz_smooth <= model + 1e-12 * std::abs(model)) break;
      lipschitz *= 2.0;
      if (!std::isfinite(lipschitz)) {
        throw DivergenceError("lasso: backtracking failed", iter);
      }
    }
    const double fz = objective(fz_smooth, z);
    if (!std::isfinite(fz)) {
      throw DivergenceError("lasso: non-finite objective", iter);
    }

    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    if (fz <= fx) {
      const double change = fx - fz;
      const Vector x_prev = std::move(x);
      x = z;
      y = x + ((t - 1.0) / t_next) * (x - x_prev);
      const double fx_prev = fx;
      fx = fz;
      t = t_next;
      if (change <= cfg.tol * std::max(1.0, std::abs(fx_prev))) break;
    } else {
      // Momentum overshot: restart from the best point.
      y = x;
      t = 1.0;
    }
    lipschitz *= 0.9;
  }
  return x;
}

double default_gamma(const Dataset& data) {
  const double mean = data.y().mean();
  const double sd =
      std::sqrt((data.y().array() - mean).square().mean());
  return std::max(1e-2 * sd, 1e-8);
}

std::vector<double> default_penalty_grid(const Dataset& data, QuantileLevel tau,
                                         double gamma, int count) {
  if (count < 1) throw ConfigError("penalty grid needs at least one point");
  const Vector g0 = smoothed_risk_grad(data, Vector::Zero(data.d()), tau, gamma);
  double top = g0.cwiseAbs().maxCoeff();
  if (!(top > 0.0)) top = 1.0;
  std::vector<double> grid(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    const double frac = count == 1 ? 1.0 : static_cast<double>(k) / (count - 1);
    grid[static_cast<std::size_t>(k)] = top * std::pow(10.0, -3.0 + 3.0 * frac);
  }
  return grid;
}

CvResult cv_quantile_lasso(const Dataset& data, QuantileLevel tau,
                           std::span<const double> penalty_grid, int folds,
                           std::uint64_t seed, double gamma) {
  if (penalty_grid.empty()) throw ConfigError("penalty grid is empty");
  if (!std::is_sorted(penalty_grid.begin(), penalty_grid.end())) {
    throw ConfigError("penalty grid must be sorted ascending");
  }
  if (folds < 2) throw ConfigError("folds must be at least 2");
  if (folds > data.n()) {
    throw ConfigError("folds (" + std::to_string(folds) +
                      ") exceeds the number of rows (" +
                      std::to_string(data.n()) + ")");
  }

  std::vector<Index> perm(static_cast<std::size_t>(data.n()));
  std::iota(perm.begin(), perm.end(), Index{0});
  Rng rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<int> fold_of(perm.size());
  for (std::size_t k = 0; k < perm.size(); ++k) {
    fold_of[static_cast<std::size_t>(perm[k])] = static_cast<int>(k) % folds;
  }

  const std::size_t m = penalty_grid.size();
  std::vector<double> loss_sum(m, 0.0);
  LassoConfig cfg;
  cfg.tau = tau;
  cfg.gamma = gamma;

  for (int f = 0; f < folds; ++f) {
    std::vector<Index> train_idx, test_idx;
    for (Index i = 0; i < data.n(); ++i) {
      (fold_of[static_cast<std::size_t>(i)] == f ? test_idx : train_idx)
          .push_back(i);
    }
    const Dataset train = data.rows(train_idx);
    const Dataset test = data.rows(test_idx);
    // Warm-started path from the largest penalty down.
    Vector theta = Vector::Zero(data.d());
    for (std::size_t k = m; k-- > 0;) {
      cfg.penalty = penalty_grid[k];
      theta = fit_quantile_lasso(train, cfg, theta);
      loss_sum[k] += empirical_risk(test, theta, tau) *
                     static_cast<double>(test.n());
    }
  }

  CvResult out;
  out.cv_loss.resize(m);
  std::size_t best = 0;
  for (std::size_t k = 0; k < m; ++k) {
    out.cv_loss[k] = loss_sum[k] / static_cast<double>(data.n());
    if (out.cv_loss[k] <= out.cv_loss[best]) best = k;
  }
  out.best_penalty = penalty_grid[best];

  Vector theta = Vector::Zero(data.d());
  for (std::size_t k = m; k-- > best;) {
    cfg.penalty = penalty_grid[k];
    theta = fit_quantile_lasso(data, cfg, theta);
  }
  out.theta = std::move(theta);
  return out;
}

}  // namespace qgibbs
