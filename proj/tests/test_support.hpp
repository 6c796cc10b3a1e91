#pragma once

// Independent numerical oracles used by the test suites. Nothing here calls
// into the library's implementation paths.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "qgibbs/linalg.hpp"

namespace qgibbs::testing {

/// Central-difference gradient with per-coordinate step h * max(1, |x_i|).
inline Vector fd_gradient(const std::function<double(const Vector&)>& f,
                          const Vector& x, double h = 1e-6) {
  Vector g(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    const double step = h * std::max(1.0, std::abs(x[i]));
    Vector xp = x, xm = x;
    xp[i] += step;
    xm[i] -= step;
    g[i] = (f(xp) - f(xm)) / (2.0 * step);
  }
  return g;
}

inline double rel_err(const Vector& a, const Vector& b) {
  return (a - b).norm() / std::max(1e-12, b.norm());
}

/// Composite Simpson rule on [a, b] with `m` (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b,
                      int m = 2000) {
  const double h = (b - a) / m;
  double s = f(a) + f(b);
  for (int k = 1; k < m; ++k) s += f(a + k * h) * (k % 2 == 1 ? 4.0 : 2.0);
  return s * h / 3.0;
}

/// Integral of f over [0, inf) via the substitution t = u / (1 - u).
inline double half_line_integral(const std::function<double(double)>& f,
                                 int m = 20000) {
  return simpson(
      [&](double u) {
        if (u >= 1.0) return 0.0;
        const double t = u / (1.0 - u);
        return f(t) / ((1.0 - u) * (1.0 - u));
      },
      0.0, 1.0, m);
}

/// Kolmogorov-Smirnov distance between a sample and a continuous CDF.
inline double ks_distance(std::vector<double> sample,
                          const std::function<double(double)>& cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, std::abs(f - static_cast<double>(i) / n),
                  std::abs(static_cast<double>(i + 1) / n - f)});
  }
  return d;
}

/// Empirical p-quantile by sorting (nearest-rank interpolation).
inline double sample_quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double h = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline Matrix random_matrix(std::mt19937_64& rng, Index rows, Index cols) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = nd(rng);
  return m;
}

inline Vector random_vector(std::mt19937_64& rng, Index n, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = nd(rng);
  return v;
}

/// Standard error of a chain average by non-overlapping batch means.
inline double batch_means_se(const std::vector<double>& x, int batches = 50) {
  const std::size_t len = x.size() / static_cast<std::size_t>(batches);
  std::vector<double> means;
  for (int b = 0; b < batches; ++b) {
    double s = 0.0;
    for (std::size_t i = 0; i < len; ++i) s += x[b * len + i];
    means.push_back(s / static_cast<double>(len));
  }
  double m = 0.0;
  for (double v : means) m += v;
  m /= batches;
  double ss = 0.0;
  for (double v : means) ss += (v - m) * (v - m);
  return std::sqrt(ss / (batches - 1) / batches);
}

}  // namespace qgibbs::testing
