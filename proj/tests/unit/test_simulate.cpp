#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>
#include <vector>

#include "qgibbs/error.hpp"
#include "qgibbs/simulate.hpp"
#include "test_support.hpp"

using namespace qgibbs;

namespace {

// Bisection inverse of a monotone CDF; independent of Boost.Math.
double invert(const std::function<double(double)>& cdf, double p) {
  double lo = -1e3, hi = 1e3;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    (cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Closed-form Student-t CDF for 3 degrees of freedom.
double t3_cdf(double t) {
  const double s = std::sqrt(3.0);
  return 0.5 + (t / (s * (1.0 + t * t / 3.0)) + std::atan(t / s)) / std::numbers::pi;
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

SimulationSpec small_spec(int reps) {
  SimulationSpec spec;
  spec.n = 30;
  spec.d = 40;
  spec.s_star = 4;
  spec.replications = reps;
  spec.master_seed = 123;
  return spec;
}

}  // namespace

TEST_CASE("noise family parsing") {
  const NoiseFamily g = NoiseFamily::parse("gaussian:2.5");
  CHECK(g.kind == NoiseFamily::Kind::gaussian);
  CHECK(g.scale == 2.5);
  const NoiseFamily t = NoiseFamily::parse("t:4:2");
  CHECK(t.kind == NoiseFamily::Kind::scaled_t);
  CHECK(t.df == 4.0);
  CHECK(t.scale == 2.0);
  CHECK(NoiseFamily::parse("gaussian").scale == 3.0);
  CHECK(NoiseFamily::parse("cauchy").scale == 1.0);
  CHECK(NoiseFamily::parse("t").df == 3.0);
  CHECK(NoiseFamily::parse("t").scale == 2.0);
  CHECK_THROWS_AS(NoiseFamily::parse("laplace"), ConfigError);
  CHECK_THROWS_AS(NoiseFamily::parse("gaussian:-1"), ConfigError);
  CHECK_THROWS_AS(NoiseFamily::parse("t:0.5:2"), ConfigError);
}

TEST_CASE("theta star construction") {
  Rng rng(1);
  CHECK((gen_theta_star(10, 10, rng).array() != 0.0).all());
  for (int k = 0; k < 100; ++k) {
    const Vector t = gen_theta_star(50, 7, rng);
    CHECK((t.array() != 0.0).count() == 7);
  }
  CHECK_THROWS_AS(gen_theta_star(5, 0, rng), ConfigError);
  CHECK_THROWS_AS(gen_theta_star(5, 6, rng), ConfigError);

  std::vector<double> values;
  std::vector<int> hits(20, 0);
  for (int k = 0; k < 20000; ++k) {
    const Vector t = gen_theta_star(20, 5, rng);
    for (Index j = 0; j < 20; ++j) {
      if (t[j] != 0.0) {
        values.push_back(t[j]);
        ++hits[static_cast<std::size_t>(j)];
      }
    }
  }
  double m = 0.0, ss = 0.0;
  for (double v : values) m += v;
  m /= static_cast<double>(values.size());
  for (double v : values) ss += (v - m) * (v - m);
  CHECK(ss / static_cast<double>(values.size()) == doctest::Approx(1.0).epsilon(0.02));
  // Each position is selected with probability 1/4.
  for (int h : hits) CHECK(std::abs(h / 20000.0 - 0.25) < 0.02);
}

TEST_CASE("quantile shift examples") {
  CHECK(quantile_shift(NoiseFamily::gaussian(3.0), QuantileLevel(0.5)) == 0.0);
  const double oracle = 3.0 * invert(normal_cdf, 0.1);
  CHECK(oracle == doctest::Approx(-3.844655).epsilon(1e-7));
  CHECK(quantile_shift(NoiseFamily::gaussian(3.0), QuantileLevel(0.1)) ==
        doctest::Approx(oracle).epsilon(1e-10));
  CHECK(quantile_shift(NoiseFamily::cauchy(1.0), QuantileLevel(0.9)) ==
        doctest::Approx(std::tan(0.4 * std::numbers::pi)));
  CHECK(std::tan(0.4 * std::numbers::pi) == doctest::Approx(3.077684).epsilon(1e-6));
  for (double tau : {0.1, 0.5, 0.9}) {
    CHECK(quantile_shift(NoiseFamily::scaled_t(3.0, 2.0), QuantileLevel(tau)) ==
          doctest::Approx(2.0 * invert(t3_cdf, tau)).epsilon(1e-10));
  }
}

TEST_CASE("centered noise has zero tau-quantile") {
  for (const NoiseFamily& fam : study_noises()) {
    for (double tau : study_taus()) {
      Rng rng(derive_seed(8, fam.label() + std::to_string(tau)));
      const Vector u = gen_noise(fam, QuantileLevel(tau), 1000000, rng);
      const double q = qgibbs::testing::sample_quantile(to_std(u), tau);
      const double tol = fam.kind == NoiseFamily::Kind::cauchy ? 0.05 : 0.01;
      CHECK(std::abs(q) < tol);
    }
  }
}

TEST_CASE("noise draws are reproducible and unshifted at the median") {
  Rng a(5), b(5), raw(5);
  const Vector u = gen_noise(NoiseFamily::gaussian(3.0), QuantileLevel(0.5), 100, a);
  CHECK(u == gen_noise(NoiseFamily::gaussian(3.0), QuantileLevel(0.5), 100, b));
  std::normal_distribution<double> nd(0.0, 3.0);
  Vector direct(100);
  for (Index i = 0; i < 100; ++i) direct[i] = nd(raw);
  CHECK(u == direct);
}

TEST_CASE("dataset generation") {
  SimulationSpec spec;
  spec.n = 100000;
  spec.d = 20;
  spec.s_star = 5;
  spec.master_seed = 77;
  const SimulatedData sim = gen_dataset(spec, 0);
  const Vector& y = sim.train.y();
  const double var = (y.array() - y.mean()).square().mean();
  CHECK(var == doctest::Approx(sim.theta_star.squaredNorm() + 9.0).epsilon(0.05));
  CHECK(sim.eval.n() == spec.n);
  CHECK(sim.eval.x() != sim.train.x());

  SimulationSpec quiet = small_spec(1);
  quiet.noise = NoiseFamily::gaussian(1e-300);
  const SimulatedData q = gen_dataset(quiet, 3);
  CHECK(empirical_risk(q.train, q.theta_star, quiet.tau) < 1e-290);

  const SimulationSpec s = small_spec(1);
  CHECK(gen_dataset(s, 0).train.x() != gen_dataset(s, 1).train.x());
  CHECK(gen_dataset(s, 4).train.y() == gen_dataset(s, 4).train.y());
}

TEST_CASE("metrics") {
  Matrix x(2, 1);
  x << 1, 1;
  Vector y(2);
  y << 1, 3;
  Vector theta(1);
  theta << 2;
  const Dataset data(x, y);
  CHECK(mpe(data, theta, QuantileLevel(0.5)) == doctest::Approx(0.5));

  Vector a(4), b = Vector::Zero(4);
  a << 1, 0, 0, 0;
  CHECK(mse(a, b) == 0.25);
  CHECK(mse(b, a) == 0.25);
  CHECK(mse(a, a) == 0.0);
  CHECK(mse(3.0 * a, b) == doctest::Approx(9.0 * mse(a, b)));
  CHECK_THROWS_AS(mse(a, Vector::Zero(3)), ShapeError);

  std::mt19937_64 rng(2);
  for (int k = 0; k < 50; ++k) {
    const Matrix xr = qgibbs::testing::random_matrix(rng, 15, 4);
    const Dataset d(xr, qgibbs::testing::random_vector(rng, 15));
    const Vector th = qgibbs::testing::random_vector(rng, 4);
    const QuantileLevel tau(0.2);
    CHECK(mpe(d, th, tau) == empirical_risk(d, th, tau));
    CHECK(mpe(d, th, tau) >= 0.0);
  }
}

TEST_CASE("replications with oracle and zero methods") {
  const SimulationSpec spec = small_spec(6);
  const std::vector<Method> methods = {make_oracle_method(), make_zero_method()};
  const ResultTable table = run_replications(spec, methods, EvalProtocol{});

  const ResultRow* oracle_mse = table.find("oracle", "mse");
  REQUIRE(oracle_mse != nullptr);
  CHECK(oracle_mse->mean == 0.0);
  CHECK(oracle_mse->reps == 6);
  CHECK(oracle_mse->failures == 0);

  double risk = 0.0;
  for (int r = 0; r < 6; ++r) {
    const SimulatedData sim = gen_dataset(spec, static_cast<std::uint64_t>(r));
    risk += empirical_risk(sim.eval, sim.theta_star, spec.tau);
  }
  CHECK(table.find("oracle", "mpe")->mean == doctest::Approx(risk / 6.0).epsilon(1e-12));
  CHECK(table.find("oracle", "mpe")->mean < table.find("zero", "mpe")->mean);
  CHECK(table.find("oracle", "mpe_in") == nullptr);

  const ResultTable one = run_replications(small_spec(1), methods, EvalProtocol{});
  for (const ResultRow& row : one.rows) CHECK(row.sd == 0.0);
}

TEST_CASE("replication results do not depend on order or threads") {
  SimulationSpec spec = small_spec(5);
  SamplerSettings sampler;
  sampler.n_iter = 400;
  sampler.burn_in = 100;
  const std::vector<Method> methods = {make_lasso_method({}), make_lmc_method(sampler)};
  EvalProtocol serial;
  serial.in_sample_mpe = true;
  EvalProtocol threaded = serial;
  threaded.threads = 4;
  const ResultTable a = run_replications(spec, methods, serial);
  const ResultTable b = run_replications(spec, methods, threaded);
  REQUIRE(a.per_replication.size() == b.per_replication.size());
  for (std::size_t k = 0; k < a.per_replication.size(); ++k) {
    CHECK(a.per_replication[k].mpe == b.per_replication[k].mpe);
    CHECK(a.per_replication[k].mse == b.per_replication[k].mse);
  }
  CHECK(a.find("lmc", "mpe_in") != nullptr);

  // A shorter run reproduces the leading replications exactly.
  spec.replications = 2;
  const ResultTable head = run_replications(spec, methods, serial);
  for (std::size_t k = 0; k < head.per_replication.size(); ++k) {
    const ReplicationResult& h = head.per_replication[k];
    const auto match = std::find_if(a.per_replication.begin(), a.per_replication.end(),
                                    [&](const ReplicationResult& r) {
                                      return r.replication == h.replication &&
                                             r.method == h.method;
                                    });
    REQUIRE(match != a.per_replication.end());
    CHECK(match->mse == h.mse);
  }
}

TEST_CASE("diverging fits are counted as failures") {
  // Pinball and prior gradients are bounded, so a real sampler cannot be
  // pushed to overflow here; a stub stands in.
  Method flaky{"flaky", [](const FitContext& ctx) -> Vector {
                 if (ctx.train.y()[0] > 0.0) throw DivergenceError("boom", 7);
                 return Vector::Zero(ctx.train.d());
               }};
  const SimulationSpec spec = small_spec(8);
  int expected = 0;
  for (int r = 0; r < 8; ++r)
    expected += gen_dataset(spec, static_cast<std::uint64_t>(r)).train.y()[0] > 0.0;
  REQUIRE(expected > 0);
  REQUIRE(expected < 8);
  const ResultTable t = run_replications(spec, {flaky, make_zero_method()}, {});
  CHECK(t.find("flaky", "mse")->failures == expected);
  CHECK(t.find("flaky", "mse")->reps == 8);
  CHECK(t.find("zero", "mse")->failures == 0);
}

TEST_CASE("result serialisation") {
  const ResultTable t = run_replications(small_spec(2), {make_zero_method()}, {});
  std::ostringstream csv;
  write_result_csv(csv, t);
  CHECK(csv.str().rfind("method,noise,tau,metric,mean,sd,reps,failures\n", 0) == 0);
  std::ostringstream text;
  write_result_text(text, t);
  CHECK(text.str().find("zero") != std::string::npos);
}

TEST_CASE("presets") {
  std::set<std::string> names;
  for (const Preset& p : presets()) names.insert(p.name);
  CHECK(names == std::set<std::string>{"table1", "table2", "table3", "table4"});
  const auto t4 = find_preset("table4");
  REQUIRE(t4);
  CHECK(t4->n == 200);
  CHECK(t4->d == 400);
  CHECK(t4->s_star == 100);
  CHECK_FALSE(find_preset("table9"));
}
