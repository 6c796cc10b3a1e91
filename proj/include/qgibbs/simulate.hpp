#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "qgibbs/loss.hpp"
#include "qgibbs/posterior.hpp"
#include "qgibbs/rng.hpp"

namespace qgibbs {

struct NoiseFamily {
  enum class Kind { gaussian, cauchy, scaled_t };

  Kind kind = Kind::gaussian;
  double scale = 1.0;  // sigma, Cauchy scale or t multiplier
  double df = 3.0;     // scaled_t only

  static NoiseFamily gaussian(double sigma);
  static NoiseFamily cauchy(double scale);
  static NoiseFamily scaled_t(double df, double factor);
  /// "gaussian:3", "cauchy:1", "t:3:2" (df, factor) or the bare names,
  /// which use the simulation-study defaults.
  static NoiseFamily parse(const std::string& text);

  void validate() const;
  std::string label() const;
};

struct SimulationSpec {
  Index n = 50;
  Index d = 100;
  Index s_star = 5;
  NoiseFamily noise = NoiseFamily::gaussian(3.0);
  QuantileLevel tau{0.5};
  int replications = 100;
  std::uint64_t master_seed = 0;

  void validate() const;
};

/// s_star nonzero N(0,1) entries at uniformly chosen positions.
Vector gen_theta_star(Index d, Index s_star, Rng& rng);

/// tau-quantile of the raw (uncentered) noise law.
double quantile_shift(const NoiseFamily& noise, QuantileLevel tau);

/// Raw draws shifted so the population tau-quantile is exactly zero.
Vector gen_noise(const NoiseFamily& noise, QuantileLevel tau, Index n, Rng& rng);

struct SimulatedData {
  Dataset train;
  Dataset eval;  // independent draw of the same size, same theta_star
  Vector theta_star;
};

/// X entries i.i.d. N(0,1), y = X theta* + u. The stream is derived from
/// (spec.master_seed, rep_index) alone.
SimulatedData gen_dataset(const SimulationSpec& spec, std::uint64_t rep_index);

/// Mean pinball prediction error; same value as empirical_risk.
double mpe(const Dataset& data, const Vector& theta, QuantileLevel tau);

/// ||theta_hat - theta_star||^2 / d
double mse(const Vector& theta_hat, const Vector& theta_star);

struct FitContext {
  const Dataset& train;
  QuantileLevel tau;
  std::uint64_t seed;                   // per (replication, method) stream
  const Vector* init = nullptr;         // baseline CV fit when requested
  const Vector* theta_star = nullptr;   // for oracle methods in tests
};

struct Method {
  std::string name;
  std::function<Vector(const FitContext&)> fit;
  bool needs_init = false;
};

struct BaselineSettings {
  int folds = 5;
  int grid_size = 30;
  std::optional<double> gamma;  // default_gamma(train) when unset
};

struct SamplerSettings {
  double lambda = 1.0;
  double varsigma = 1.0;
  double c1 = std::numeric_limits<double>::infinity();
  RiskScaling scaling = RiskScaling::mean;
  std::optional<double> eta;  // PosteriorTarget::default_step_size when unset
  std::int64_t n_iter = 30000;
  std::int64_t burn_in = 500;
  std::int64_t thin = 1;
  bool adapt = true;  // MALA only
  double target_accept = 0.5;
};

Method make_lasso_method(const BaselineSettings& settings);
Method make_lmc_method(const SamplerSettings& settings);
Method make_mala_method(const SamplerSettings& settings);
Method make_oracle_method();
Method make_zero_method();

/// Lasso CV fit used to initialise samplers inside run_replications.
Vector baseline_cv_fit(const Dataset& train, QuantileLevel tau,
                       const BaselineSettings& settings, std::uint64_t seed);

struct EvalProtocol {
  bool in_sample_mpe = false;  // additionally report training-set mpe
  BaselineSettings baseline;
  int threads = 1;
};

struct ReplicationResult {
  int replication = 0;
  std::string method;
  bool failed = false;
  double mpe = 0.0;     // evaluation set
  double mpe_in = 0.0;  // training set
  double mse = 0.0;
};

struct ResultRow {
  std::string method;
  std::string noise;
  double tau = 0.5;
  std::string metric;
  double mean = 0.0;
  double sd = 0.0;
  int reps = 0;
  int failures = 0;
};

struct ResultTable {
  std::vector<ResultRow> rows;
  std::vector<ReplicationResult> per_replication;

  const ResultRow* find(const std::string& method,
                        const std::string& metric) const;
  void append(const ResultTable& other);
};

ResultTable run_replications(const SimulationSpec& spec,
                             const std::vector<Method>& methods,
                             const EvalProtocol& protocol);

/// CSV: method,noise,tau,metric,mean,sd,reps,failures
void write_result_csv(std::ostream& os, const ResultTable& table);
/// Aligned text table, one block per noise/tau cell, "mean (sd)" per method.
void write_result_text(std::ostream& os, const ResultTable& table);

struct Preset {
  std::string name;
  Index n;
  Index d;
  Index s_star;
};

/// table1..table4: (n, d) in {(50,100),(200,400)} x s* in {5, n/2}.
const std::vector<Preset>& presets();
std::optional<Preset> find_preset(const std::string& name);

/// The three noise laws of the simulation study.
std::vector<NoiseFamily> study_noises();
std::vector<double> study_taus();

}  // namespace qgibbs
