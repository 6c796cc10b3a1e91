#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "qgibbs/error.hpp"
#include "qgibbs/samplers.hpp"
#include "test_support.hpp"

using namespace qgibbs;
using qgibbs::testing::batch_means_se;

namespace {

const GradientFn kGaussGrad = [](const Vector& t) -> Vector { return -t; };
const LogDensityFn kGaussLogp = [](const Vector& t) { return -0.5 * t.squaredNorm(); };

SamplerConfig config(double eta, std::int64_t n_iter, std::int64_t burn_in,
                     std::uint64_t seed) {
  SamplerConfig cfg;
  cfg.eta = eta;
  cfg.n_iter = n_iter;
  cfg.burn_in = burn_in;
  cfg.seed = seed;
  return cfg;
}

// Pools all coordinates of a chain into one series of a per-row statistic.
std::vector<double> row_average(const Matrix& draws, int power) {
  std::vector<double> out(static_cast<std::size_t>(draws.rows()));
  for (Index i = 0; i < draws.rows(); ++i)
    out[static_cast<std::size_t>(i)] = draws.row(i).array().pow(power).mean();
  return out;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

TEST_CASE("sampler config validation") {
  CHECK_THROWS_AS(config(0.0, 10, 0, 0).validate(), ConfigError);
  CHECK_THROWS_AS(config(0.1, 10, 10, 0).validate(), ConfigError);
  SamplerConfig cfg = config(0.1, 10, 0, 0);
  cfg.thin = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.thin = 3;
  CHECK(cfg.kept_count() == 3);
  cfg.thin = 1;
  cfg.target_accept = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("deterministic Langevin step") {
  Vector theta(1), grad(1);
  theta << 1.0;
  grad << -2.0;
  CHECK(langevin_step(theta, grad, 0.1, Vector::Zero(1))[0] == doctest::Approx(0.8));
}

TEST_CASE("zero drift gives a Gaussian random walk") {
  const double eta = 0.01;
  const Chain c = lmc_run([](const Vector& t) -> Vector { return Vector::Zero(t.size()); },
                          1, Vector::Zero(1), config(eta, 100000, 0, 3));
  REQUIRE(c.kept == 100000);
  double ss = 0.0;
  double prev = 0.0;
  for (Index i = 0; i < c.draws.rows(); ++i) {
    const double inc = c.draws(i, 0) - prev;
    ss += inc * inc;
    prev = c.draws(i, 0);
  }
  CHECK(ss / 100000.0 == doctest::Approx(2.0 * eta).epsilon(0.05));
  CHECK(c.accept_rate == 1.0);
}

TEST_CASE("LMC on a Gaussian matches the discretised stationary law") {
  // theta' = (1 - eta) theta + sqrt(2 eta) W has stationary variance 2 / (2 - eta).
  double deviation[2] = {0.0, 0.0};
  double se[2] = {0.0, 0.0};
  const double etas[2] = {0.2, 0.1};
  for (int k = 0; k < 2; ++k) {
    const Chain c = lmc_run(kGaussGrad, 10, Vector::Zero(10),
                            config(etas[k], 200000, 1000, 11 + k));
    for (Index j = 0; j < 10; ++j) CHECK(std::abs(c.draws.col(j).mean()) < 0.05);
    const std::vector<double> sq = row_average(c.draws, 2);
    const double var = mean_of(sq);
    CHECK(var == doctest::Approx(2.0 / (2.0 - etas[k])).epsilon(0.015));
    deviation[k] = std::abs(var - 1.0);
    se[k] = batch_means_se(sq);
  }
  CHECK(deviation[1] <= 0.5 * deviation[0] + 3.0 * (se[0] + se[1]));
}

TEST_CASE("LMC divergence is reported with its iteration") {
  const GradientFn explode = [](const Vector& t) -> Vector { return 1e3 * t; };
  try {
    lmc_run(explode, 2, Vector::Ones(2), config(1.0, 1000, 0, 1));
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.iteration() > 1);
    CHECK(e.iteration() < 1000);
  }
}

TEST_CASE("LMC rejects moves that leave the support") {
  const SupportFn box = [](const Vector& t) { return t.cwiseAbs().maxCoeff() < 0.3; };
  const Chain c = lmc_run(kGaussGrad, 3, Vector::Zero(3), config(0.05, 5000, 0, 5), box);
  CHECK(c.draws.cwiseAbs().maxCoeff() < 0.3);
  CHECK(c.accept_rate < 1.0);
}

TEST_CASE("chains are deterministic given the seed") {
  const SamplerConfig cfg = config(0.1, 3000, 100, 42);
  const Chain a = lmc_run(kGaussGrad, 4, Vector::Ones(4), cfg);
  const Chain b = lmc_run(kGaussGrad, 4, Vector::Ones(4), cfg);
  CHECK(a.draws == b.draws);
  const Chain m1 = mala_run(kGaussLogp, kGaussGrad, 4, Vector::Ones(4), cfg);
  const Chain m2 = mala_run(kGaussLogp, kGaussGrad, 4, Vector::Ones(4), cfg);
  CHECK(m1.draws == m2.draws);
  CHECK(m1.accept_rate == m2.accept_rate);
  const Chain other = lmc_run(kGaussGrad, 4, Vector::Ones(4), config(0.1, 3000, 100, 43));
  CHECK(other.draws != a.draws);
}

TEST_CASE("thinning keeps every k-th draw of the same run") {
  SamplerConfig cfg = config(0.1, 1000, 100, 9);
  const Chain full = mala_run(kGaussLogp, kGaussGrad, 2, Vector::Zero(2), cfg);
  cfg.thin = 3;
  const Chain thinned = mala_run(kGaussLogp, kGaussGrad, 2, Vector::Zero(2), cfg);
  REQUIRE(thinned.kept == 300);
  for (std::int64_t k = 0; k < thinned.kept; ++k) {
    CHECK(thinned.iteration_of(k) == 100 + 3 * (k + 1));
    CHECK(thinned.draws.row(k) == full.draws.row(3 * k + 2));
  }
}

TEST_CASE("MALA log acceptance ratio") {
  Vector t(2), g(2);
  t << 0.3, -1.2;
  g << 0.5, 0.1;
  CHECK(mala_log_accept_ratio(-1.0, -1.0, t, t, g, g, 0.3) == 0.0);

  // Hand evaluation against the Gaussian proposal densities.
  Vector p(2), gp(2);
  p << 0.1, -0.7;
  gp = -p;
  const Vector gt = -t;
  const double eta = 0.2;
  const double lq_back = -(t - p - eta * gp).squaredNorm() / (4.0 * eta);
  const double lq_fwd = -(p - t - eta * gt).squaredNorm() / (4.0 * eta);
  const double expected = -0.5 * p.squaredNorm() + 0.5 * t.squaredNorm() + lq_back - lq_fwd;
  CHECK(mala_log_accept_ratio(-0.5 * t.squaredNorm(), -0.5 * p.squaredNorm(), t, p, gt,
                              gp, eta) == doctest::Approx(expected));
}

TEST_CASE("adaptive MALA on a Gaussian") {
  SamplerConfig cfg = config(0.5, 105000, 5000, 21);
  cfg.adapt = true;
  const Chain c = mala_run(kGaussLogp, kGaussGrad, 10, Vector::Zero(10), cfg);
  REQUIRE(c.kept == 100000);
  CHECK(c.accept_rate >= 0.4);
  CHECK(c.accept_rate <= 0.7);
  CHECK(c.final_eta > 0.0);

  for (Index j = 0; j < 10; ++j) {
    CHECK(std::abs(c.draws.col(j).mean()) < 0.05);
    const double var = (c.draws.col(j).array() - c.draws.col(j).mean()).square().mean();
    CHECK(var >= 0.92);
    CHECK(var <= 1.08);
  }

  const double targets[4] = {0.0, 1.0, 0.0, 3.0};
  for (int power = 1; power <= 4; ++power) {
    const std::vector<double> series = row_average(c.draws, power);
    CHECK(std::abs(mean_of(series) - targets[power - 1]) <= 3.0 * batch_means_se(series));
  }

  const ChainSummary s = chain_summary(c, 0.9);
  for (Index j = 0; j < 10; ++j) {
    CHECK(std::abs(s.lower[j] + 1.644854) < 0.1);
    CHECK(std::abs(s.upper[j] - 1.644854) < 0.1);
  }
  CHECK(posterior_mean(c).cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("MALA acceptance falls as the step grows") {
  double previous = 1.0;
  for (int k = 0; k <= 8; ++k) {
    const double eta = 0.05 * std::pow(10.0, k / 4.0);
    const Chain c = mala_run(kGaussLogp, kGaussGrad, 10, Vector::Zero(10),
                             config(eta, 20000, 1000, 77));
    CHECK(c.accept_rate <= previous + 0.01);
    previous = c.accept_rate;
  }
}

TEST_CASE("MALA respects a hard support") {
  const LogDensityFn boxed = [](const Vector& t) {
    return t.cwiseAbs().maxCoeff() < 0.5 ? -0.5 * t.squaredNorm()
                                         : -std::numeric_limits<double>::infinity();
  };
  const Chain c = mala_run(boxed, kGaussGrad, 3, Vector::Zero(3), config(0.2, 20000, 0, 8));
  CHECK(c.draws.cwiseAbs().maxCoeff() < 0.5);
  CHECK_THROWS_AS(mala_run(boxed, kGaussGrad, 3, Vector::Ones(3), config(0.2, 100, 0, 8)),
                  DomainError);
}

TEST_CASE("posterior mean and summaries of hand-built chains") {
  Chain c;
  c.draws.resize(2, 2);
  c.draws << 0, 2, 2, 0;
  c.draw_sum = c.draws.colwise().sum().transpose();
  c.kept = 2;
  CHECK(posterior_mean(c) == Vector::Ones(2));

  Chain single;
  single.draws = Matrix::Constant(1, 3, 0.7);
  single.draw_sum = Vector::Constant(3, 0.7);
  single.kept = 1;
  CHECK(posterior_mean(single) == Vector::Constant(3, 0.7));

  Chain flat;
  flat.draws = Matrix::Constant(50, 2, -1.5);
  flat.draw_sum = Vector::Constant(2, -75.0);
  flat.kept = 50;
  const ChainSummary s = chain_summary(flat);
  CHECK(s.sd.norm() == 0.0);
  CHECK(s.lower == Vector::Constant(2, -1.5));
  CHECK(s.upper == Vector::Constant(2, -1.5));

  Chain empty;
  CHECK_THROWS_AS(posterior_mean(empty), Error);
  CHECK_THROWS_AS(chain_summary(empty), Error);

  Chain unstored;
  unstored.draw_sum = Vector::Ones(2);
  unstored.kept = 1;
  CHECK(posterior_mean(unstored) == Vector::Ones(2));
  CHECK_THROWS_AS(chain_summary(unstored), Error);
}

TEST_CASE("chain csv layout") {
  SamplerConfig cfg = config(0.1, 6, 2, 1);
  cfg.thin = 2;
  const Chain c = lmc_run(kGaussGrad, 2, Vector::Zero(2), cfg);
  std::ostringstream os;
  write_chain_csv(os, c);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "iter,theta_1,theta_2");
  std::getline(is, line);
  CHECK(line.rfind("4,", 0) == 0);
  std::getline(is, line);
  CHECK(line.rfind("6,", 0) == 0);
  CHECK_FALSE(std::getline(is, line));
}

TEST_CASE("empirical quantile interpolates") {
  CHECK(empirical_quantile({3.0, 1.0, 2.0, 4.0}, 0.5) == doctest::Approx(2.5));
  CHECK(empirical_quantile({5.0}, 0.9) == 5.0);
  CHECK(empirical_quantile({0.0, 10.0}, 0.25) == doctest::Approx(2.5));
}
