#include "qgibbs/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "qgibbs/error.hpp"
#include "qgibbs/rng.hpp"

namespace qgibbs {

void SamplerConfig::validate() const {
  if (!(eta > 0.0) || !std::isfinite(eta)) {
    throw ConfigError("eta must be positive and finite");
  }
  if (n_iter < 1) throw ConfigError("n_iter must be positive");
  if (burn_in < 0 || burn_in >= n_iter) {
    throw ConfigError("burn_in must satisfy 0 <= burn_in < n_iter");
  }
  if (thin < 1) throw ConfigError("thin must be at least 1");
  if (!(target_accept > 0.0 && target_accept < 1.0)) {
    throw ConfigError("target_accept must lie in (0, 1)");
  }
}

namespace {

void check_init(const Vector& init, Index d) {
  if (init.size() != d) {
    throw ShapeError("init has length " + std::to_string(init.size()) +
                     ", expected " + std::to_string(d));
  }
  if (!init.allFinite()) throw DomainError("init has non-finite entries");
}

class Recorder {
 public:
  Recorder(const SamplerConfig& cfg, Index d) : cfg_(cfg) {
    chain_.draw_sum = Vector::Zero(d);
    chain_.burn_in = cfg.burn_in;
    chain_.thin = cfg.thin;
    chain_.seed = cfg.seed;
    if (cfg.store_draws) chain_.draws.resize(cfg.kept_count(), d);
  }

  // `iter` is 1-based: the state after the iter-th transition.
  void record(std::int64_t iter, const Vector& theta) {
    if (iter <= cfg_.burn_in || (iter - cfg_.burn_in) % cfg_.thin != 0) return;
    if (cfg_.store_draws) chain_.draws.row(chain_.kept) = theta.transpose();
    chain_.draw_sum += theta;
    ++chain_.kept;
  }

  Chain finish(double accept_rate, double eta) {
    chain_.accept_rate = accept_rate;
    chain_.final_eta = eta;
    return std::move(chain_);
  }

 private:
  const SamplerConfig& cfg_;
  Chain chain_;
};

[[noreturn]] void diverged(const char* who, std::int64_t iter) {
  throw DivergenceError(std::string(who) + " diverged at iteration " +
                            std::to_string(iter) +
                            " (non-finite iterate); reduce eta",
                        iter);
}

}  // namespace

Vector langevin_step(const Vector& theta, const Vector& grad, double eta,
                     const Vector& noise) {
  return theta + eta * grad + std::sqrt(2.0 * eta) * noise;
}

Chain lmc_run(const GradientFn& grad, Index d, const Vector& init,
              const SamplerConfig& cfg, const SupportFn& support) {
  cfg.validate();
  check_init(init, d);
  Rng rng(cfg.seed);
  Recorder rec(cfg, d);
  Vector theta = init;
  std::int64_t moved = 0;
  for (std::int64_t iter = 1; iter <= cfg.n_iter; ++iter) {
    const Vector g = grad(theta);
    if (g.size() != d) throw ShapeError("gradient oracle returned wrong length");
    Vector next = langevin_step(theta, g, cfg.eta, standard_normal(rng, d));
    if (!next.allFinite()) diverged("LMC", iter);
    if (!support || support(next)) {
      theta = std::move(next);
      ++moved;
    }
    rec.record(iter, theta);
  }
  const double rate = support ? static_cast<double>(moved) / cfg.n_iter : 1.0;
  return rec.finish(rate, cfg.eta);
}

double mala_log_accept_ratio(double logp_current, double logp_proposal,
                             const Vector& current, const Vector& proposal,
                             const Vector& grad_current,
                             const Vector& grad_proposal, double eta) {
  if (std::isinf(logp_proposal) && logp_proposal < 0) {
    return -std::numeric_limits<double>::infinity();
  }
  // log q(to | from) = -||to - from - eta * grad(from)||^2 / (4 eta) + const
  const double log_q_forward =
      -(proposal - current - eta * grad_current).squaredNorm() / (4.0 * eta);
  const double log_q_backward =
      -(current - proposal - eta * grad_proposal).squaredNorm() / (4.0 * eta);
  return logp_proposal - logp_current + log_q_backward - log_q_forward;
}

Chain mala_run(const LogDensityFn& logp, const GradientFn& grad, Index d,
               const Vector& init, const SamplerConfig& cfg) {
  cfg.validate();
  check_init(init, d);
  Rng rng(cfg.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Recorder rec(cfg, d);

  Vector theta = init;
  double lp = logp(theta);
  if (!std::isfinite(lp)) {
    throw DomainError("MALA: initial point is outside the target support");
  }
  Vector g = grad(theta);
  if (g.size() != d) throw ShapeError("gradient oracle returned wrong length");

  double eta = cfg.eta;
  const double up = 0.02;
  const double down = 0.02 * cfg.target_accept / (1.0 - cfg.target_accept);
  std::int64_t accepted_after_burn = 0;

  for (std::int64_t iter = 1; iter <= cfg.n_iter; ++iter) {
    const Vector noise = standard_normal(rng, d);
    const double u = unif(rng);
    Vector proposal = langevin_step(theta, g, eta, noise);
    if (!proposal.allFinite()) diverged("MALA", iter);

    bool accept = false;
    const double lp_prop = logp(proposal);
    if (std::isfinite(lp_prop)) {
      Vector g_prop = grad(proposal);
      const double log_ratio =
          mala_log_accept_ratio(lp, lp_prop, theta, proposal, g, g_prop, eta);
      if (std::isnan(log_ratio)) diverged("MALA", iter);
      if (log_ratio >= 0.0 || std::log(u) < log_ratio) {
        accept = true;
        theta = std::move(proposal);
        lp = lp_prop;
        g = std::move(g_prop);
      }
    } else if (std::isnan(lp_prop) || lp_prop > 0) {
      diverged("MALA", iter);
    }

    if (iter <= cfg.burn_in) {
      if (cfg.adapt) eta *= std::exp(accept ? up : -down);
    } else if (accept) {
      ++accepted_after_burn;
    }
    rec.record(iter, theta);
  }
  const double rate = static_cast<double>(accepted_after_burn) /
                      static_cast<double>(cfg.n_iter - cfg.burn_in);
  return rec.finish(rate, eta);
}

Vector posterior_mean(const Chain& chain) {
  if (chain.kept == 0) throw DomainError("posterior_mean: empty chain");
  return chain.draw_sum / static_cast<double>(chain.kept);
}

double empirical_quantile(std::vector<double> values, double p) {
  if (values.empty()) throw DomainError("empirical_quantile: no values");
  std::sort(values.begin(), values.end());
  const double h = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

ChainSummary chain_summary(const Chain& chain, double level) {
  if (chain.kept == 0) throw DomainError("chain_summary: empty chain");
  if (chain.draws.rows() != chain.kept) {
    throw DomainError("chain_summary: chain was run without stored draws");
  }
  if (!(level > 0.0 && level < 1.0)) {
    throw ConfigError("credible level must lie in (0, 1)");
  }
  const Index d = chain.draws.cols();
  ChainSummary s;
  s.level = level;
  s.accept_rate = chain.accept_rate;
  s.final_eta = chain.final_eta;
  s.mean = chain.draws.colwise().mean().transpose();
  s.sd.resize(d);
  s.lower.resize(d);
  s.upper.resize(d);
  const double alpha = 0.5 * (1.0 - level);
  for (Index j = 0; j < d; ++j) {
    const auto col = chain.draws.col(j);
    s.sd[j] = std::sqrt((col.array() - s.mean[j]).square().mean());
    std::vector<double> v(col.data(), col.data() + col.size());
    s.lower[j] = empirical_quantile(v, alpha);
    s.upper[j] = empirical_quantile(std::move(v), 1.0 - alpha);
  }
  return s;
}

void write_chain_csv(std::ostream& os, const Chain& chain) {
  if (chain.draws.rows() != chain.kept) {
    throw DomainError("write_chain_csv: chain was run without stored draws");
  }
  os << "iter";
  for (Index j = 0; j < chain.draws.cols(); ++j) os << ",theta_" << (j + 1);
  os << '\n';
  os.precision(17);
  for (Index k = 0; k < chain.draws.rows(); ++k) {
    os << chain.iteration_of(k);
    for (Index j = 0; j < chain.draws.cols(); ++j) os << ',' << chain.draws(k, j);
    os << '\n';
  }
}

}  // namespace qgibbs
