#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "qgibbs/simulate.hpp"

namespace qgibbs {

/// Constants of the moment, Bernstein and eigenvalue assumptions.
struct BoundConstants {
  double K = 1.0;
  double C = 1.0;
  double C_x = 1.0;
  double kappa = 1.0;

  void validate() const;
};

struct RateQuery {
  double n = 1;
  double d = 1;
  double s_star = 1;
  double epsilon = 0.05;

  void validate() const;
};

enum class RateRegime { slow, fast };

// All rate outputs below are rate terms only: the multiplicative constants of
// the oracle inequalities are not known and are not included.

/// s* log(n sqrt(d) / s*) / sqrt(n). DomainError when the log argument <= 1.
double slow_rate_xi(const RateQuery& q);

/// s* log(n sqrt(d) / s*) / n, i.e. slow_rate_xi / sqrt(n).
double fast_rate_delta(const RateQuery& q);

struct Tuning {
  double lambda;
  double varsigma;
};

/// slow: lambda = sqrt(n); fast: lambda = n / max(2K, C);
/// both: varsigma = 1 / (C_x n sqrt(d)).
Tuning theoretical_tuning(const RateQuery& q, const BoundConstants& c,
                          RateRegime regime);

/// log(2/eps) / sqrt(n) (slow) or log(2/eps) / n (fast).
double high_prob_terms(const RateQuery& q, RateRegime regime);

struct ScalingPoint {
  Index n = 0;
  Index d = 0;
  double mean_mse = 0.0;
  double sd = 0.0;
  double theoretical_delta = 0.0;
  int failures = 0;
};

struct ScalingRecord {
  std::vector<ScalingPoint> points;
  double slope = 0.0;        // least squares slope of log(mean mse) on log(n)
  double theory_slope = 0.0; // same regression applied to the delta curve
  bool degenerate = false;   // some mean mse <= 0; slope undefined (NaN)
};

struct ScalingOptions {
  /// d = d_ratio * n when set, otherwise template.d for every point.
  std::optional<double> d_ratio = 2.0;
  EvalProtocol protocol;
  /// Method whose posterior-mean mse is tracked; LMC by default.
  std::optional<Method> method;
  SamplerSettings sampler;
};

/// Least-squares slope of y on x.
double ls_slope(const std::vector<double>& x, const std::vector<double>& y);

ScalingRecord scaling_experiment(const SimulationSpec& templ,
                                 const std::vector<Index>& n_grid, int reps,
                                 std::uint64_t master_seed,
                                 const ScalingOptions& options);

/// CSV: n,d,mean_mse,sd,theoretical_delta
void write_scaling_csv(std::ostream& os, const ScalingRecord& record);
/// One line: "slope=<s> theory_slope=<t> points=<k>"
void write_scaling_summary(std::ostream& os, const ScalingRecord& record);

}  // namespace qgibbs
