#include "qgibbs/bounds.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <string>

#include "qgibbs/error.hpp"

namespace qgibbs {

void BoundConstants::validate() const {
  if (!(K > 0.0 && C > 0.0 && C_x > 0.0 && kappa > 0.0)) {
    throw ConfigError("bound constants K, C, C_x, kappa must all be positive");
  }
}

void RateQuery::validate() const {
  if (!(n >= 1.0) || !(d >= 1.0)) throw ConfigError("n and d must be >= 1");
  if (!(s_star >= 1.0)) throw ConfigError("s_star must be >= 1");
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw ConfigError("epsilon must lie in (0, 1)");
  }
}

namespace {

double log_term(const RateQuery& q) {
  q.validate();
  const double arg = q.n * std::sqrt(q.d) / q.s_star;
  if (!(arg > 1.0)) {
    throw DomainError("rate is vacuous: n sqrt(d) / s* = " +
                      std::to_string(arg) + " <= 1");
  }
  return q.s_star * std::log(arg);
}

}  // namespace

double slow_rate_xi(const RateQuery& q) { return log_term(q) / std::sqrt(q.n); }

double fast_rate_delta(const RateQuery& q) { return log_term(q) / q.n; }

Tuning theoretical_tuning(const RateQuery& q, const BoundConstants& c,
                          RateRegime regime) {
  q.validate();
  c.validate();
  const double lambda = regime == RateRegime::slow
                            ? std::sqrt(q.n)
                            : q.n / std::max(2.0 * c.K, c.C);
  return {lambda, 1.0 / (c.C_x * q.n * std::sqrt(q.d))};
}

double high_prob_terms(const RateQuery& q, RateRegime regime) {
  q.validate();
  const double l = std::log(2.0 / q.epsilon);
  return regime == RateRegime::slow ? l / std::sqrt(q.n) : l / q.n;
}

double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw ShapeError("ls_slope: need two or more paired points");
  }
  const double k = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= k;
  my /= k;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw DomainError("ls_slope: x values are all equal");
  return sxy / sxx;
}

ScalingRecord scaling_experiment(const SimulationSpec& templ,
                                 const std::vector<Index>& n_grid, int reps,
                                 std::uint64_t master_seed,
                                 const ScalingOptions& options) {
  if (n_grid.size() < 3) {
    throw ConfigError("scaling experiment needs at least 3 grid points");
  }
  const Method method = options.method.value_or(make_lmc_method(options.sampler));

  ScalingRecord rec;
  std::vector<double> log_n, log_mse, log_delta;
  for (std::size_t k = 0; k < n_grid.size(); ++k) {
    SimulationSpec spec = templ;
    spec.n = n_grid[k];
    spec.d = options.d_ratio
                 ? static_cast<Index>(std::llround(*options.d_ratio *
                                                   static_cast<double>(spec.n)))
                 : templ.d;
    spec.replications = reps;
    spec.master_seed = derive_seed(master_seed, "scaling", k);
    const ResultTable table = run_replications(spec, {method}, options.protocol);
    const ResultRow* row = table.find(method.name, "mse");

    ScalingPoint p;
    p.n = spec.n;
    p.d = spec.d;
    p.mean_mse = row->mean;
    p.sd = row->sd;
    p.failures = row->failures;
    p.theoretical_delta = fast_rate_delta(
        {static_cast<double>(spec.n), static_cast<double>(spec.d),
         static_cast<double>(spec.s_star), 0.05});
    rec.points.push_back(p);

    log_n.push_back(std::log(static_cast<double>(spec.n)));
    log_delta.push_back(std::log(p.theoretical_delta));
    if (!(p.mean_mse > 0.0)) rec.degenerate = true;
    log_mse.push_back(std::log(p.mean_mse));
  }
  rec.theory_slope = ls_slope(log_n, log_delta);
  rec.slope = rec.degenerate ? std::numeric_limits<double>::quiet_NaN()
                             : ls_slope(log_n, log_mse);
  return rec;
}

void write_scaling_csv(std::ostream& os, const ScalingRecord& record) {
  os << "n,d,mean_mse,sd,theoretical_delta\n" << std::setprecision(17);
  for (const auto& p : record.points) {
    os << p.n << ',' << p.d << ',' << p.mean_mse << ',' << p.sd << ','
       << p.theoretical_delta << '\n';
  }
}

void write_scaling_summary(std::ostream& os, const ScalingRecord& record) {
  os << std::setprecision(6) << "slope=" << record.slope
     << " theory_slope=" << record.theory_slope
     << " points=" << record.points.size()
     << (record.degenerate ? " degenerate=1" : "") << '\n';
}

}  // namespace qgibbs
