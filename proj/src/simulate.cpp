#include "qgibbs/simulate.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <iomanip>
#include <map>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>

#include "qgibbs/baseline.hpp"
#include "qgibbs/error.hpp"
#include "qgibbs/parallel.hpp"
#include "qgibbs/samplers.hpp"

namespace qgibbs {

NoiseFamily NoiseFamily::gaussian(double sigma) {
  return {Kind::gaussian, sigma, 0.0};
}

NoiseFamily NoiseFamily::cauchy(double scale) {
  return {Kind::cauchy, scale, 0.0};
}

NoiseFamily NoiseFamily::scaled_t(double df, double factor) {
  return {Kind::scaled_t, factor, df};
}

NoiseFamily NoiseFamily::parse(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ':');) parts.push_back(item);
  if (parts.empty()) throw ConfigError("noise: empty specification");
  const auto num = [&](std::size_t i) {
    try {
      std::size_t used = 0;
      const double v = std::stod(parts[i], &used);
      if (used != parts[i].size()) throw std::invalid_argument(parts[i]);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("noise: bad number '" + parts[i] + "' in '" + text + "'");
    }
  };
  NoiseFamily out;
  if (parts[0] == "gaussian" && parts.size() <= 2) {
    out = gaussian(parts.size() == 2 ? num(1) : 3.0);
  } else if (parts[0] == "cauchy" && parts.size() <= 2) {
    out = cauchy(parts.size() == 2 ? num(1) : 1.0);
  } else if (parts[0] == "t" && parts.size() <= 3) {
    out = scaled_t(parts.size() >= 2 ? num(1) : 3.0,
                   parts.size() == 3 ? num(2) : 2.0);
  } else {
    throw ConfigError("noise must be gaussian[:sigma], cauchy[:scale] or "
                      "t[:df[:factor]], got '" + text + "'");
  }
  out.validate();
  return out;
}

void NoiseFamily::validate() const {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw ConfigError("noise scale must be positive");
  }
  if (kind == Kind::scaled_t && !(df >= 1.0)) {
    throw ConfigError("noise df must be at least 1");
  }
}

std::string NoiseFamily::label() const {
  std::ostringstream os;
  os << std::setprecision(6);
  switch (kind) {
    case Kind::gaussian: os << "gaussian:" << scale; break;
    case Kind::cauchy: os << "cauchy:" << scale; break;
    case Kind::scaled_t: os << "t:" << df << ':' << scale; break;
  }
  return os.str();
}

void SimulationSpec::validate() const {
  if (n < 1 || d < 1) throw ConfigError("n and d must be positive");
  if (s_star < 1 || s_star > d) {
    throw ConfigError("s_star must satisfy 1 <= s_star <= d");
  }
  if (replications < 1) throw ConfigError("replications must be positive");
  noise.validate();
}

Vector gen_theta_star(Index d, Index s_star, Rng& rng) {
  if (s_star < 1 || s_star > d) {
    throw ConfigError("s_star must satisfy 1 <= s_star <= d");
  }
  std::vector<Index> pos(static_cast<std::size_t>(d));
  std::iota(pos.begin(), pos.end(), Index{0});
  // Partial Fisher-Yates: the first s_star slots are a uniform subset.
  for (Index k = 0; k < s_star; ++k) {
    std::uniform_int_distribution<Index> pick(k, d - 1);
    std::swap(pos[static_cast<std::size_t>(k)],
              pos[static_cast<std::size_t>(pick(rng))]);
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector theta = Vector::Zero(d);
  for (Index k = 0; k < s_star; ++k) {
    double v = normal(rng);
    while (v == 0.0) v = normal(rng);
    theta[pos[static_cast<std::size_t>(k)]] = v;
  }
  return theta;
}

double quantile_shift(const NoiseFamily& noise, QuantileLevel tau) {
  noise.validate();
  const double t = tau.value();
  switch (noise.kind) {
    case NoiseFamily::Kind::gaussian:
      return noise.scale * boost::math::quantile(boost::math::normal(), t);
    case NoiseFamily::Kind::cauchy:
      return noise.scale * std::tan(std::numbers::pi * (t - 0.5));
    case NoiseFamily::Kind::scaled_t:
      return noise.scale *
             boost::math::quantile(boost::math::students_t(noise.df), t);
  }
  return 0.0;
}

Vector gen_noise(const NoiseFamily& noise, QuantileLevel tau, Index n,
                 Rng& rng) {
  if (n < 1) throw ConfigError("gen_noise: n must be positive");
  const double shift = quantile_shift(noise, tau);
  Vector u(n);
  switch (noise.kind) {
    case NoiseFamily::Kind::gaussian: {
      std::normal_distribution<double> dist(0.0, noise.scale);
      for (Index i = 0; i < n; ++i) u[i] = dist(rng);
      break;
    }
    case NoiseFamily::Kind::cauchy: {
      std::cauchy_distribution<double> dist(0.0, noise.scale);
      for (Index i = 0; i < n; ++i) u[i] = dist(rng);
      break;
    }
    case NoiseFamily::Kind::scaled_t: {
      std::student_t_distribution<double> dist(noise.df);
      for (Index i = 0; i < n; ++i) u[i] = noise.scale * dist(rng);
      break;
    }
  }
  if (shift != 0.0) u.array() -= shift;
  return u;
}

namespace {

Dataset draw_rows(const SimulationSpec& spec, const Vector& theta_star,
                  Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix x(spec.n, spec.d);
  for (Index i = 0; i < spec.n; ++i) {
    for (Index j = 0; j < spec.d; ++j) x(i, j) = normal(rng);
  }
  Vector y = x * theta_star + gen_noise(spec.noise, spec.tau, spec.n, rng);
  return Dataset(std::move(x), std::move(y));
}

}  // namespace

SimulatedData gen_dataset(const SimulationSpec& spec, std::uint64_t rep_index) {
  spec.validate();
  Rng rng(derive_seed(spec.master_seed, "replication", rep_index));
  Vector theta_star = gen_theta_star(spec.d, spec.s_star, rng);
  Dataset train = draw_rows(spec, theta_star, rng);
  Dataset eval = draw_rows(spec, theta_star, rng);
  return {std::move(train), std::move(eval), std::move(theta_star)};
}

double mpe(const Dataset& data, const Vector& theta, QuantileLevel tau) {
  return empirical_risk(data, theta, tau);
}

double mse(const Vector& theta_hat, const Vector& theta_star) {
  if (theta_hat.size() != theta_star.size() || theta_hat.size() == 0) {
    throw ShapeError("mse: vectors must have equal, nonzero length");
  }
  return (theta_hat - theta_star).squaredNorm() /
         static_cast<double>(theta_hat.size());
}

Vector baseline_cv_fit(const Dataset& train, QuantileLevel tau,
                       const BaselineSettings& settings, std::uint64_t seed) {
  const double gamma = settings.gamma.value_or(default_gamma(train));
  const auto grid = default_penalty_grid(train, tau, gamma, settings.grid_size);
  const int folds = std::min<int>(settings.folds, static_cast<int>(train.n()));
  return cv_quantile_lasso(train, tau, grid, folds, seed, gamma).theta;
}

Method make_lasso_method(const BaselineSettings& settings) {
  // Inside run_replications the shared CV fit arrives as ctx.init.
  return {"lasso",
          [settings](const FitContext& ctx) {
            if (ctx.init != nullptr) return Vector(*ctx.init);
            return baseline_cv_fit(ctx.train, ctx.tau, settings, ctx.seed);
          },
          true};
}

namespace {

struct SamplerSetup {
  PosteriorTarget target;
  SamplerConfig cfg;
  Vector init;
};

SamplerSetup setup_sampler(const SamplerSettings& s, const FitContext& ctx) {
  GibbsConfig g;
  g.tau = ctx.tau;
  g.lambda = s.lambda;
  g.prior.varsigma = s.varsigma;
  g.prior.c1 = s.c1;
  g.scaling = s.scaling;
  PosteriorTarget target(ctx.train, g);
  SamplerConfig cfg;
  cfg.eta = s.eta.value_or(target.default_step_size());
  cfg.n_iter = s.n_iter;
  cfg.burn_in = s.burn_in;
  cfg.thin = s.thin;
  cfg.seed = ctx.seed;
  cfg.adapt = s.adapt;
  cfg.target_accept = s.target_accept;
  cfg.store_draws = false;
  Vector init = ctx.init != nullptr ? *ctx.init : Vector::Zero(ctx.train.d());
  return {std::move(target), cfg, std::move(init)};
}

}  // namespace

Method make_lmc_method(const SamplerSettings& settings) {
  return {"lmc",
          [settings](const FitContext& ctx) {
            const SamplerSetup s = setup_sampler(settings, ctx);
            const PosteriorTarget& target = s.target;
            SupportFn support;
            if (std::isfinite(settings.c1)) {
              support = [&target](const Vector& th) { return target.in_support(th); };
            }
            SamplerConfig cfg = s.cfg;
            cfg.adapt = false;
            const Chain chain = lmc_run(
                [&target](const Vector& th) { return target.log_density_grad(th); },
                target.dim(), s.init, cfg, support);
            return posterior_mean(chain);
          },
          true};
}

Method make_mala_method(const SamplerSettings& settings) {
  return {"mala",
          [settings](const FitContext& ctx) {
            const SamplerSetup s = setup_sampler(settings, ctx);
            const PosteriorTarget& target = s.target;
            const Chain chain = mala_run(
                [&target](const Vector& th) { return target.log_density_unnorm(th); },
                [&target](const Vector& th) { return target.log_density_grad(th); },
                target.dim(), s.init, s.cfg);
            return posterior_mean(chain);
          },
          true};
}

Method make_oracle_method() {
  return {"oracle",
          [](const FitContext& ctx) {
            if (ctx.theta_star == nullptr) {
              throw ConfigError("oracle method needs theta_star");
            }
            return Vector(*ctx.theta_star);
          },
          false};
}

Method make_zero_method() {
  return {"zero",
          [](const FitContext& ctx) { return Vector(Vector::Zero(ctx.train.d())); },
          false};
}

const ResultRow* ResultTable::find(const std::string& method,
                                   const std::string& metric) const {
  for (const auto& r : rows) {
    if (r.method == method && r.metric == metric) return &r;
  }
  return nullptr;
}

void ResultTable::append(const ResultTable& other) {
  rows.insert(rows.end(), other.rows.begin(), other.rows.end());
  per_replication.insert(per_replication.end(), other.per_replication.begin(),
                         other.per_replication.end());
}

ResultTable run_replications(const SimulationSpec& spec,
                             const std::vector<Method>& methods,
                             const EvalProtocol& protocol) {
  spec.validate();
  if (methods.empty()) throw ConfigError("run_replications: no methods");
  const bool any_init = std::any_of(methods.begin(), methods.end(),
                                    [](const Method& m) { return m.needs_init; });
  const auto reps = static_cast<std::size_t>(spec.replications);
  std::vector<std::vector<ReplicationResult>> slots(reps);

  parallel_for(reps, protocol.threads, [&](std::size_t r) {
    const SimulatedData sim = gen_dataset(spec, r);
    Vector init;
    if (any_init) {
      init = baseline_cv_fit(sim.train, spec.tau, protocol.baseline,
                             derive_seed(spec.master_seed, "baseline", r));
    }
    for (const Method& m : methods) {
      ReplicationResult res;
      res.replication = static_cast<int>(r);
      res.method = m.name;
      FitContext ctx{sim.train, spec.tau,
                     derive_seed(spec.master_seed, "method:" + m.name, r),
                     m.needs_init ? &init : nullptr, &sim.theta_star};
      try {
        const Vector theta = m.fit(ctx);
        res.mpe = mpe(sim.eval, theta, spec.tau);
        res.mpe_in = mpe(sim.train, theta, spec.tau);
        res.mse = mse(theta, sim.theta_star);
      } catch (const DivergenceError&) {
        res.failed = true;
      }
      slots[r].push_back(res);
    }
  });

  ResultTable table;
  for (auto& s : slots) {
    table.per_replication.insert(table.per_replication.end(), s.begin(), s.end());
  }

  std::vector<std::string> metrics = {"mpe", "mse"};
  if (protocol.in_sample_mpe) metrics.insert(metrics.begin() + 1, "mpe_in");
  for (const Method& m : methods) {
    for (const auto& metric : metrics) {
      std::vector<double> values;
      int failures = 0;
      for (const auto& res : table.per_replication) {
        if (res.method != m.name) continue;
        if (res.failed) {
          ++failures;
          continue;
        }
        values.push_back(metric == "mpe" ? res.mpe
                         : metric == "mse" ? res.mse
                                           : res.mpe_in);
      }
      ResultRow row;
      row.method = m.name;
      row.noise = spec.noise.label();
      row.tau = spec.tau.value();
      row.metric = metric;
      row.reps = spec.replications;
      row.failures = failures;
      if (!values.empty()) {
        const double k = static_cast<double>(values.size());
        row.mean = std::accumulate(values.begin(), values.end(), 0.0) / k;
        double ss = 0.0;
        for (double v : values) ss += (v - row.mean) * (v - row.mean);
        row.sd = values.size() > 1 ? std::sqrt(ss / (k - 1.0)) : 0.0;
      } else {
        row.mean = std::numeric_limits<double>::quiet_NaN();
      }
      table.rows.push_back(row);
    }
  }
  return table;
}

void write_result_csv(std::ostream& os, const ResultTable& table) {
  os << "method,noise,tau,metric,mean,sd,reps,failures\n";
  os << std::setprecision(17);
  for (const auto& r : table.rows) {
    os << r.method << ',' << r.noise << ',' << r.tau << ',' << r.metric << ','
       << r.mean << ',' << r.sd << ',' << r.reps << ',' << r.failures << '\n';
  }
}

void write_result_text(std::ostream& os, const ResultTable& table) {
  std::vector<std::string> methods;
  for (const auto& r : table.rows) {
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) {
      methods.push_back(r.method);
    }
  }
  // Cells keyed by (noise, tau, metric) in first-seen order.
  std::vector<std::tuple<std::string, double, std::string>> cells;
  std::map<std::tuple<std::string, double, std::string, std::string>,
           const ResultRow*> lookup;
  for (const auto& r : table.rows) {
    const auto key = std::make_tuple(r.noise, r.tau, r.metric);
    if (std::find(cells.begin(), cells.end(), key) == cells.end()) {
      cells.push_back(key);
    }
    lookup[{r.noise, r.tau, r.metric, r.method}] = &r;
  }

  const int w = 20;
  os << std::left << std::setw(14) << "noise" << std::setw(10) << "quantile"
     << std::setw(8) << "error";
  for (const auto& m : methods) os << std::setw(w) << m;
  os << '\n';
  std::string last_noise;
  double last_tau = -1.0;
  for (const auto& [noise, tau, metric] : cells) {
    std::ostringstream tau_text;
    tau_text << "tau=" << tau;
    os << std::setw(14) << (noise == last_noise ? "" : noise) << std::setw(10)
       << (noise == last_noise && tau == last_tau ? "" : tau_text.str())
       << std::setw(8) << metric;
    last_noise = noise;
    last_tau = tau;
    for (const auto& m : methods) {
      const auto it = lookup.find({noise, tau, metric, m});
      std::ostringstream cell;
      if (it != lookup.end()) {
        cell << std::fixed << std::setprecision(3) << it->second->mean << " ("
             << it->second->sd << ")";
        if (it->second->failures > 0) cell << '*' << it->second->failures;
      }
      os << std::setw(w) << cell.str();
    }
    os << '\n';
  }
}

const std::vector<Preset>& presets() {
  static const std::vector<Preset> kPresets = {
      {"table1", 50, 100, 5},
      {"table2", 50, 100, 25},
      {"table3", 200, 400, 5},
      {"table4", 200, 400, 100},
  };
  return kPresets;
}

std::optional<Preset> find_preset(const std::string& name) {
  for (const auto& p : presets()) {
    if (p.name == name) return p;
  }
  return std::nullopt;
}

std::vector<NoiseFamily> study_noises() {
  return {NoiseFamily::gaussian(3.0), NoiseFamily::cauchy(1.0),
          NoiseFamily::scaled_t(3.0, 2.0)};
}

std::vector<double> study_taus() { return {0.1, 0.5, 0.9}; }

}  // namespace qgibbs
