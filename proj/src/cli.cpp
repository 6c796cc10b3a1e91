#include "qgibbs/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include "qgibbs/baseline.hpp"
#include "qgibbs/bounds.hpp"
#include "qgibbs/error.hpp"
#include "qgibbs/io.hpp"
#include "qgibbs/posterior.hpp"
#include "qgibbs/samplers.hpp"
#include "qgibbs/simulate.hpp"

namespace qgibbs::cli {

namespace fs = std::filesystem;

namespace {

struct KeySpec {
  std::string key;
  std::string section;
  std::string default_value;
  std::string help;
  std::string alias;  // extra long flag name, e.g. "s" for s_star
};

// Keys under [Run] that describe a run rather than configure it.
const std::set<std::string> kMetadataKeys = {"subcommand", "version",
                                             "timestamp"};

class Settings {
 public:
  explicit Settings(std::map<std::string, std::string> values)
      : values_(std::move(values)) {}

  const std::string& str(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing key '" + key + "'");
    return it->second;
  }

  void set(const std::string& key, std::string value) {
    values_[key] = std::move(value);
  }

  bool is_auto(const std::string& key) const {
    const auto& v = str(key);
    return v.empty() || v == "auto";
  }

  double real(const std::string& key) const {
    const auto& v = str(key);
    if (v == "inf" || v == "+inf") return std::numeric_limits<double>::infinity();
    try {
      std::size_t used = 0;
      const double out = std::stod(v, &used);
      if (used == v.size()) return out;
    } catch (const std::exception&) {
    }
    throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
  }

  std::int64_t integer(const std::string& key) const {
    const auto& v = str(key);
    try {
      std::size_t used = 0;
      const long long out = std::stoll(v, &used);
      if (used == v.size()) return out;
    } catch (const std::exception&) {
    }
    throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
  }

  std::uint64_t u64(const std::string& key) const {
    const auto& v = str(key);
    try {
      std::size_t used = 0;
      const unsigned long long out = std::stoull(v, &used);
      if (used == v.size() && v.front() != '-') return out;
    } catch (const std::exception&) {
    }
    throw ConfigError("key '" + key + "': expected an unsigned integer, got '" +
                      v + "'");
  }

  bool flag(const std::string& key) const {
    const auto& v = str(key);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("key '" + key + "': expected true/false, got '" + v + "'");
  }

  std::vector<std::string> list(const std::string& key) const {
    std::vector<std::string> out;
    std::stringstream ss(str(key));
    for (std::string item; std::getline(ss, item, ',');) {
      if (!item.empty()) out.push_back(item);
    }
    if (out.empty()) throw ConfigError("key '" + key + "': empty list");
    return out;
  }

  std::vector<double> reals(const std::string& key) const {
    std::vector<double> out;
    for (const auto& item : list(key)) {
      try {
        std::size_t used = 0;
        out.push_back(std::stod(item, &used));
        if (used != item.size()) throw std::invalid_argument(item);
      } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': bad number '" + item + "'");
      }
    }
    return out;
  }

 private:
  std::map<std::string, std::string> values_;
};

struct Context {
  fs::path out_dir;
  int threads = 1;
  std::ostream& out;
};

// ---------------------------------------------------------------------------
// Key tables

std::vector<KeySpec> gibbs_keys(const std::string& scaling_default,
                                bool with_tau = true) {
  std::vector<KeySpec> keys = {
      {"lambda", "GibbsConfig", "1", "inverse temperature", ""},
      {"varsigma", "GibbsConfig", "1", "prior scale", ""},
      {"c1", "GibbsConfig", "inf", "l1-ball radius of the prior support", ""},
      {"scaling", "GibbsConfig", scaling_default,
       "risk scaling in the exponent: mean (lambda * r_n) or sum (lambda * n * r_n)",
       ""},
  };
  if (with_tau) {
    keys.insert(keys.begin(),
                {"tau", "GibbsConfig", "0.5", "quantile level in (0,1)", ""});
  }
  return keys;
}

std::vector<KeySpec> sampler_keys() {
  return {
      {"eta", "SamplerConfig", "auto",
       "step size; auto = 0.5 / (w * mean ||x_i||^2 + 1/varsigma^2)", ""},
      {"n_iter", "SamplerConfig", "30000", "total iterations", ""},
      {"burn_in", "SamplerConfig", "500", "discarded initial iterations", ""},
      {"thin", "SamplerConfig", "1", "keep every thin-th draw", ""},
      {"adapt", "SamplerConfig", "true", "MALA step adaptation during burn-in", ""},
      {"target_accept", "SamplerConfig", "0.5", "MALA adaptation target", ""},
  };
}

std::vector<KeySpec> lasso_keys() {
  return {
      {"folds", "LassoConfig", "5", "cross-validation folds", ""},
      {"grid_size", "LassoConfig", "30", "penalty grid length", ""},
      {"gamma", "LassoConfig", "auto", "loss smoothing; auto = 0.01 sd(y)", ""},
  };
}

std::vector<KeySpec> concat(std::vector<std::vector<KeySpec>> parts) {
  std::vector<KeySpec> out;
  for (auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

std::vector<KeySpec> simulate_keys() {
  return concat({
      {{"seed", "Run", "0", "master seed", ""},
       {"preset", "SimulationSpec", "table1", "table1 | table2 | table3 | table4", ""},
       {"n", "SimulationSpec", "", "sample size (default from preset)", ""},
       {"d", "SimulationSpec", "", "dimension (default from preset)", ""},
       {"s_star", "SimulationSpec", "", "sparsity (default from preset)", "s"},
       {"noise", "SimulationSpec", "all",
        "all or a comma list of gaussian:SIGMA, cauchy:SCALE, t:DF:FACTOR", ""},
       {"taus", "SimulationSpec", "all", "all or a comma list of quantile levels", ""},
       {"reps", "SimulationSpec", "100", "replications per cell", ""},
       {"methods", "SimulationSpec", "lmc,mala,lasso",
        "comma list from lmc, mala, lasso, zero", ""},
       {"in_sample_mpe", "SimulationSpec", "false",
        "also report training-set mpe (metric mpe_in)", ""}},
      gibbs_keys("sum", false),
      sampler_keys(),
      lasso_keys(),
  });
}

std::vector<KeySpec> fit_keys() {
  return concat({
      {{"seed", "Run", "0", "master seed", ""},
       {"method", "Run", "lmc", "lmc | mala | lasso", ""},
       {"data", "Data", "", "training CSV", ""},
       {"response", "Data", "y", "response column name", ""},
       {"standardize", "Data", "true", "center and scale columns", ""},
       {"stats_data", "Data", "",
        "CSV to take standardization statistics from (default: the training data)",
        ""},
       {"log_response", "Data", "false", "log-transform the response first", ""},
       {"top_corr", "Data", "0",
        "keep the k covariates most correlated with y (0 = all)", ""},
       {"init", "Data", "cv",
        "sampler start: cv (baseline CV fit) or a theta CSV path", ""}},
      gibbs_keys("mean"),
      sampler_keys(),
      {{"level", "SamplerConfig", "0.9", "credible interval level", ""},
       {"dump_chain", "SamplerConfig", "false", "write chain.csv", ""}},
      lasso_keys(),
      {{"penalty", "LassoConfig", "cv", "lasso penalty or cv", ""}},
  });
}

std::vector<KeySpec> split_keys() {
  return {
      {"seed", "Run", "0", "shuffle seed", ""},
      {"data", "Data", "", "CSV to split", ""},
      {"train_fraction", "SplitSpec", "auto", "training share in (0,1)", ""},
      {"train_count", "SplitSpec", "auto", "training rows (with test_count)", ""},
      {"test_count", "SplitSpec", "auto", "test rows (with train_count)", ""},
  };
}

std::vector<KeySpec> predict_keys() {
  return {
      {"model", "Data", "", "directory written by fit", ""},
      {"data", "Data", "", "CSV with the model's covariate columns", ""},
      {"response", "Data", "y", "response column (optional in the file)", ""},
      {"tau", "GibbsConfig", "model", "quantile level for mpe; model = fit value", ""},
  };
}

std::vector<KeySpec> bounds_keys() {
  return {
      {"n", "Bounds", "", "sample size", ""},
      {"d", "Bounds", "", "dimension", ""},
      {"s_star", "Bounds", "", "sparsity", "s"},
      {"epsilon", "Bounds", "0.05", "confidence level in (0,1)", ""},
      {"K", "Bounds", "1", "Bernstein constant", ""},
      {"C", "Bounds", "1", "loss bound", ""},
      {"C_x", "Bounds", "1", "covariate moment bound", ""},
      {"kappa", "Bounds", "1", "eigenvalue constant", ""},
  };
}

std::vector<KeySpec> scaling_keys() {
  return concat({
      {{"seed", "Run", "0", "master seed", ""},
       {"preset", "Scaling", "fastcheck", "fastcheck | paper", ""},
       {"n_grid", "Scaling", "", "comma list of sample sizes (default from preset)", ""},
       {"reps", "Scaling", "", "replications per grid point (default from preset)", ""},
       {"d_ratio", "Scaling", "2", "d = d_ratio * n", ""},
       {"s_star", "Scaling", "5", "sparsity", "s"},
       {"noise", "Scaling", "gaussian:3", "noise law", ""}},
      gibbs_keys("sum"),
      sampler_keys(),
      lasso_keys(),
  });
}

// ---------------------------------------------------------------------------
// Helpers

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  return os;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

void write_manifest(const fs::path& dir, const std::string& subcommand,
                    const std::vector<KeySpec>& keys, const Settings& s) {
  std::vector<ConfigSection> sections;
  const auto section = [&](const std::string& name) -> ConfigSection& {
    for (auto& sec : sections) {
      if (sec.first == name) return sec;
    }
    sections.push_back({name, {}});
    return sections.back();
  };
  auto& run = section("Run");
  run.second.push_back({"subcommand", subcommand});
  run.second.push_back({"version", kVersion});
  run.second.push_back({"timestamp", utc_timestamp()});
  for (const auto& k : keys) section(k.section).second.push_back({k.key, s.str(k.key)});
  auto os = open_out(dir / "manifest.cfg");
  os << "# qgibbs run manifest; replay with: qgibbs replay <this file> --out DIR\n";
  write_config(os, sections);
}

std::string format_tau(double tau) {
  std::ostringstream os;
  os << tau;
  return os.str();
}

SamplerSettings sampler_settings(const Settings& s) {
  SamplerSettings out;
  out.lambda = s.real("lambda");
  out.varsigma = s.real("varsigma");
  out.c1 = s.real("c1");
  out.scaling = parse_risk_scaling(s.str("scaling"));
  if (!s.is_auto("eta")) out.eta = s.real("eta");
  out.n_iter = s.integer("n_iter");
  out.burn_in = s.integer("burn_in");
  out.thin = s.integer("thin");
  out.adapt = s.flag("adapt");
  out.target_accept = s.real("target_accept");
  // Surface bad values as configuration errors before any work starts.
  SamplerConfig probe;
  probe.n_iter = out.n_iter;
  probe.burn_in = out.burn_in;
  probe.thin = out.thin;
  probe.target_accept = out.target_accept;
  if (out.eta) probe.eta = *out.eta;
  probe.validate();
  GibbsConfig g;
  g.lambda = out.lambda;
  g.prior.varsigma = out.varsigma;
  g.prior.c1 = out.c1;
  g.validate();
  return out;
}

BaselineSettings baseline_settings(const Settings& s) {
  BaselineSettings out;
  out.folds = static_cast<int>(s.integer("folds"));
  out.grid_size = static_cast<int>(s.integer("grid_size"));
  if (out.folds < 2) throw ConfigError("key 'folds': must be at least 2");
  if (out.grid_size < 1) throw ConfigError("key 'grid_size': must be positive");
  if (!s.is_auto("gamma")) {
    out.gamma = s.real("gamma");
    if (!(*out.gamma > 0.0)) throw ConfigError("key 'gamma': must be positive");
  }
  return out;
}

std::vector<Method> build_methods(const Settings& s) {
  const SamplerSettings sampler = sampler_settings(s);
  const BaselineSettings baseline = baseline_settings(s);
  std::vector<Method> out;
  for (const auto& name : s.list("methods")) {
    if (name == "lmc") out.push_back(make_lmc_method(sampler));
    else if (name == "mala") out.push_back(make_mala_method(sampler));
    else if (name == "lasso") out.push_back(make_lasso_method(baseline));
    else if (name == "zero") out.push_back(make_zero_method());
    else throw ConfigError("key 'methods': unknown method '" + name +
                           "' (valid: lmc, mala, lasso, zero)");
  }
  return out;
}

QuantileLevel tau_key(const Settings& s, const std::string& key) {
  const double t = s.real(key);
  if (!(t > 0.0 && t < 1.0)) {
    throw ConfigError("key '" + key + "': tau must lie in (0, 1), got " + s.str(key));
  }
  return QuantileLevel(t);
}

// ---------------------------------------------------------------------------
// simulate

void resolve_simulate(Settings& s) {
  const auto preset = find_preset(s.str("preset"));
  if (!preset) {
    std::string names;
    for (const auto& p : presets()) names += (names.empty() ? "" : ", ") + p.name;
    throw ConfigError("key 'preset': unknown preset '" + s.str("preset") +
                      "' (valid: " + names + ")");
  }
  if (s.str("n").empty()) s.set("n", std::to_string(preset->n));
  if (s.str("d").empty()) s.set("d", std::to_string(preset->d));
  if (s.str("s_star").empty()) s.set("s_star", std::to_string(preset->s_star));
}

void cmd_simulate(const Settings& s, const Context& ctx) {
  std::vector<NoiseFamily> noises;
  if (s.str("noise") == "all") {
    noises = study_noises();
  } else {
    for (const auto& item : s.list("noise")) noises.push_back(NoiseFamily::parse(item));
  }
  std::vector<double> taus = s.str("taus") == "all" ? study_taus() : s.reals("taus");
  const std::vector<Method> methods = build_methods(s);

  EvalProtocol protocol;
  protocol.in_sample_mpe = s.flag("in_sample_mpe");
  protocol.baseline = baseline_settings(s);
  protocol.threads = ctx.threads;

  const std::uint64_t seed = s.u64("seed");
  ResultTable table;
  for (const auto& noise : noises) {
    for (double tau : taus) {
      SimulationSpec spec;
      spec.n = s.integer("n");
      spec.d = s.integer("d");
      spec.s_star = s.integer("s_star");
      spec.noise = noise;
      if (!(tau > 0.0 && tau < 1.0)) {
        throw ConfigError("key 'taus': tau must lie in (0, 1)");
      }
      spec.tau = QuantileLevel(tau);
      spec.replications = static_cast<int>(s.integer("reps"));
      spec.master_seed =
          derive_seed(seed, "simulate/" + noise.label() + "/" + format_tau(tau));
      spec.validate();
      table.append(run_replications(spec, methods, protocol));
    }
  }
  {
    auto os = open_out(ctx.out_dir / "results.csv");
    write_result_csv(os, table);
  }
  {
    auto os = open_out(ctx.out_dir / "results.txt");
    write_result_text(os, table);
  }
  write_result_text(ctx.out, table);
}

// ---------------------------------------------------------------------------
// fit

// theta.csv holds "name,theta" rows; names are text, so the numeric CSV
// reader does not apply.
Vector read_theta(const fs::path& path, std::vector<std::string>* names = nullptr) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || line != "name,theta") {
    throw ParseError("'" + path.string() + "': expected header name,theta", 1, 0);
  }
  std::vector<double> values;
  std::int64_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto comma = line.rfind(',');
    double v = 0.0;
    const char* first = comma == std::string::npos ? nullptr : line.data() + comma + 1;
    const char* last = line.data() + line.size();
    if (first == nullptr || std::from_chars(first, last, v).ptr != last || !std::isfinite(v)) {
      throw ParseError("'" + path.string() + "' line " + std::to_string(line_no) +
                           ": bad coefficient",
                       line_no, 2);
    }
    if (names) names->push_back(line.substr(0, comma));
    values.push_back(v);
  }
  return Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
}

void cmd_fit(const Settings& s, const Context& ctx) {
  if (s.str("data").empty()) throw ConfigError("key 'data': a training CSV is required");
  const std::string method = s.str("method");
  if (method != "lmc" && method != "mala" && method != "lasso") {
    throw ConfigError("key 'method': expected lmc, mala or lasso, got '" + method + "'");
  }
  const QuantileLevel tau = tau_key(s, "tau");
  const std::uint64_t seed = s.u64("seed");
  const BaselineSettings baseline = baseline_settings(s);
  const SamplerSettings sampler = sampler_settings(s);
  const bool log_response = s.flag("log_response");
  const double level = s.real("level");
  if (!(level > 0.0 && level < 1.0)) {
    throw ConfigError("key 'level': must lie in (0, 1)");
  }

  std::vector<std::string> names;
  Dataset raw = load_csv(s.str("data"), s.str("response"), &names);
  const std::int64_t top = s.integer("top_corr");
  if (top < 0) throw ConfigError("key 'top_corr': must be nonnegative");
  if (top > 0) {
    const auto cols = top_correlated(raw, top);
    std::vector<std::string> kept;
    for (Index j : cols) kept.push_back(names[static_cast<std::size_t>(j)]);
    raw = select_columns(raw, cols);
    names = std::move(kept);
  }

  StandardizationParams params;
  if (s.flag("standardize") && !s.str("stats_data").empty()) {
    std::vector<std::string> all_names;
    const Dataset all = load_csv(s.str("stats_data"), s.str("response"), &all_names);
    std::vector<Index> cols;
    for (const auto& name : names) {
      const auto it = std::find(all_names.begin(), all_names.end(), name);
      if (it == all_names.end()) {
        throw ShapeError("stats_data lacks covariate '" + name + "'");
      }
      cols.push_back(it - all_names.begin());
    }
    params = fit_standardization(select_columns(all, cols), log_response);
  } else if (s.flag("standardize")) {
    params = fit_standardization(raw, log_response);
  } else {
    params = StandardizationParams::identity(raw.d());
    params.log_response = log_response;
  }
  const Dataset data = params.apply(raw);

  std::ostringstream report;
  report << std::setprecision(17);
  report << "method = " << method << '\n';
  Vector theta;

  const auto cv_fit = [&](double* best) {
    const double gamma = baseline.gamma.value_or(default_gamma(data));
    const auto grid = default_penalty_grid(data, tau, gamma, baseline.grid_size);
    const int folds = std::min<int>(baseline.folds, static_cast<int>(data.n()));
    const CvResult cv = cv_quantile_lasso(data, tau, grid, folds,
                                          derive_seed(seed, "cv"), gamma);
    *best = cv.best_penalty;
    return cv.theta;
  };

  if (method == "lasso") {
    if (s.str("penalty") == "cv") {
      double best = 0.0;
      theta = cv_fit(&best);
      report << "penalty = " << best << "\npenalty_source = cv\n";
    } else {
      LassoConfig cfg;
      cfg.tau = tau;
      cfg.penalty = s.real("penalty");
      cfg.gamma = baseline.gamma.value_or(default_gamma(data));
      theta = fit_quantile_lasso(data, cfg, Vector::Zero(data.d()));
      report << "penalty = " << cfg.penalty << "\npenalty_source = fixed\n";
    }
  } else {
    Vector init;
    if (s.str("init") == "cv") {
      double best = 0.0;
      init = cv_fit(&best);
      report << "init = baseline-cv\ninit_penalty = " << best << '\n';
    } else {
      init = read_theta(s.str("init"));
      if (init.size() != data.d()) {
        throw ShapeError("init has " + std::to_string(init.size()) +
                         " coefficients, data has " + std::to_string(data.d()));
      }
      report << "init = " << s.str("init") << '\n';
    }

    GibbsConfig g;
    g.tau = tau;
    g.lambda = sampler.lambda;
    g.prior.varsigma = sampler.varsigma;
    g.prior.c1 = sampler.c1;
    g.scaling = sampler.scaling;
    const PosteriorTarget target(data, g);
    SamplerConfig cfg;
    cfg.eta = sampler.eta.value_or(target.default_step_size());
    cfg.n_iter = sampler.n_iter;
    cfg.burn_in = sampler.burn_in;
    cfg.thin = sampler.thin;
    cfg.seed = derive_seed(seed, "sampler");
    cfg.adapt = method == "mala" && sampler.adapt;
    cfg.target_accept = sampler.target_accept;

    const auto grad = [&target](const Vector& th) { return target.log_density_grad(th); };
    Chain chain;
    if (method == "lmc") {
      SupportFn support;
      if (std::isfinite(sampler.c1)) {
        support = [&target](const Vector& th) { return target.in_support(th); };
      }
      chain = lmc_run(grad, data.d(), init, cfg, support);
    } else {
      chain = mala_run([&target](const Vector& th) { return target.log_density_unnorm(th); },
                       grad, data.d(), init, cfg);
    }
    theta = posterior_mean(chain);
    const ChainSummary sum = chain_summary(chain, level);
    report << "eta = " << cfg.eta << "\nfinal_eta = " << chain.final_eta
           << "\naccept_rate = " << chain.accept_rate << "\nkept = " << chain.kept
           << '\n';

    auto os = open_out(ctx.out_dir / "summary.csv");
    os << "name,mean,sd,lower,upper\n";
    for (Index j = 0; j < data.d(); ++j) {
      os << names[static_cast<std::size_t>(j)] << ',' << format_double(sum.mean[j])
         << ',' << format_double(sum.sd[j]) << ',' << format_double(sum.lower[j])
         << ',' << format_double(sum.upper[j]) << '\n';
    }
    if (s.flag("dump_chain")) {
      auto cs = open_out(ctx.out_dir / "chain.csv");
      write_chain_csv(cs, chain);
    }
  }

  const Vector fitted = params.predict(raw.x(), theta);
  double total = 0.0;
  for (Index i = 0; i < raw.n(); ++i) total += pinball_loss(raw.y()[i], fitted[i], tau);
  const double train_mpe = total / static_cast<double>(raw.n());
  report << "train_mpe = " << format_double(train_mpe) << '\n';

  {
    auto os = open_out(ctx.out_dir / "theta.csv");
    os << "name,theta\n";
    for (Index j = 0; j < theta.size(); ++j) {
      os << names[static_cast<std::size_t>(j)] << ',' << format_double(theta[j]) << '\n';
    }
  }
  {
    auto os = open_out(ctx.out_dir / "params.csv");
    write_params(os, params, names);
  }
  {
    auto os = open_out(ctx.out_dir / "fit.txt");
    os << report.str();
  }
  ctx.out << report.str();
}

// ---------------------------------------------------------------------------
// split

void write_rows(const fs::path& path, const CsvTable& table,
                const std::vector<Index>& rows) {
  auto os = open_out(path);
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    os << (j > 0 ? "," : "") << table.header[j];
  }
  os << '\n';
  for (Index i : rows) {
    for (Index j = 0; j < table.values.cols(); ++j) {
      os << (j > 0 ? "," : "") << format_double(table.values(i, j));
    }
    os << '\n';
  }
}

void cmd_split(const Settings& s, const Context& ctx) {
  if (s.str("data").empty()) throw ConfigError("key 'data': a CSV is required");
  SplitSpec spec;
  spec.seed = derive_seed(s.u64("seed"), "split");
  if (!s.is_auto("train_fraction")) spec.train_fraction = s.real("train_fraction");
  if (!s.is_auto("train_count")) spec.train_count = s.integer("train_count");
  if (!s.is_auto("test_count")) spec.test_count = s.integer("test_count");
  const CsvTable table = read_csv_table(fs::path(s.str("data")));
  const SplitIndices idx = split_indices(table.values.rows(), spec);
  write_rows(ctx.out_dir / "train.csv", table, idx.train);
  write_rows(ctx.out_dir / "test.csv", table, idx.test);
  ctx.out << "train = " << idx.train.size() << "\ntest = " << idx.test.size() << '\n';
}

// ---------------------------------------------------------------------------
// predict

void cmd_predict(const Settings& s, const Context& ctx) {
  if (s.str("model").empty()) throw ConfigError("key 'model': a fit directory is required");
  if (s.str("data").empty()) throw ConfigError("key 'data': a CSV is required");
  const fs::path model = s.str("model");
  if (!fs::exists(model / "params.csv")) {
    throw IoError("model directory '" + model.string() + "' has no params.csv");
  }
  std::vector<std::string> names;
  const StandardizationParams params = read_params(model / "params.csv", &names);
  std::vector<std::string> theta_names;
  const Vector theta = read_theta(model / "theta.csv", &theta_names);
  if (theta_names != names) {
    throw ShapeError("theta.csv and params.csv disagree on the covariates");
  }

  double tau_value = 0.0;
  if (s.str("tau") == "model") {
    const ConfigFile m = parse_config(model / "manifest.cfg");
    const auto it = m.values.find("tau");
    if (it == m.values.end()) throw IoError("model manifest has no tau");
    tau_value = Settings(m.values).real("tau");
  } else {
    tau_value = s.real("tau");
  }
  if (!(tau_value > 0.0 && tau_value < 1.0)) {
    throw ConfigError("key 'tau': must lie in (0, 1)");
  }
  const QuantileLevel tau(tau_value);

  const CsvTable table = read_csv_table(fs::path(s.str("data")));
  Matrix x(table.values.rows(), static_cast<Index>(names.size()));
  for (std::size_t j = 0; j < names.size(); ++j) {
    const auto it = std::find(table.header.begin(), table.header.end(), names[j]);
    if (it == table.header.end()) {
      throw ShapeError("data file lacks model covariate '" + names[j] + "'");
    }
    x.col(static_cast<Index>(j)) = table.values.col(it - table.header.begin());
  }
  const Vector pred = params.predict(x, theta);

  {
    auto os = open_out(ctx.out_dir / "predictions.csv");
    os << "prediction\n";
    for (Index i = 0; i < pred.size(); ++i) os << format_double(pred[i]) << '\n';
  }
  const auto yit = std::find(table.header.begin(), table.header.end(), s.str("response"));
  if (yit != table.header.end()) {
    const auto y = table.values.col(yit - table.header.begin());
    double total = 0.0;
    for (Index i = 0; i < pred.size(); ++i) total += pinball_loss(y[i], pred[i], tau);
    const double value = total / static_cast<double>(pred.size());
    auto os = open_out(ctx.out_dir / "predict.txt");
    os << "mpe = " << format_double(value) << '\n';
    ctx.out << "mpe = " << format_double(value) << '\n';
  }
  ctx.out << "predictions = " << pred.size() << '\n';
}

// ---------------------------------------------------------------------------
// bounds

void cmd_bounds(const Settings& s, const Context& ctx) {
  for (const char* key : {"n", "d", "s_star"}) {
    if (s.str(key).empty()) throw ConfigError(std::string("key '") + key + "' is required");
  }
  RateQuery q;
  q.n = s.real("n");
  q.d = s.real("d");
  q.s_star = s.real("s_star");
  q.epsilon = s.real("epsilon");
  q.validate();
  BoundConstants c;
  c.K = s.real("K");
  c.C = s.real("C");
  c.C_x = s.real("C_x");
  c.kappa = s.real("kappa");
  c.validate();

  const Tuning slow = theoretical_tuning(q, c, RateRegime::slow);
  const Tuning fast = theoretical_tuning(q, c, RateRegime::fast);
  const std::vector<std::pair<std::string, double>> rows = {
      {"xi", slow_rate_xi(q)},
      {"delta", fast_rate_delta(q)},
      {"high_prob_slow", high_prob_terms(q, RateRegime::slow)},
      {"high_prob_fast", high_prob_terms(q, RateRegime::fast)},
      {"lambda_slow", slow.lambda},
      {"lambda_fast", fast.lambda},
      {"varsigma", slow.varsigma},
  };
  ctx.out << "# rate terms only; oracle-inequality constants are not included\n";
  ctx.out << std::fixed << std::setprecision(6);
  for (const auto& [name, value] : rows) ctx.out << name << " = " << value << '\n';
  ctx.out << std::defaultfloat;
  if (!ctx.out_dir.empty()) {
    auto os = open_out(ctx.out_dir / "bounds.csv");
    os << "quantity,value\n";
    for (const auto& [name, value] : rows) os << name << ',' << format_double(value) << '\n';
  }
}

// ---------------------------------------------------------------------------
// scaling

void resolve_scaling(Settings& s) {
  const std::string preset = s.str("preset");
  if (preset == "fastcheck") {
    if (s.str("n_grid").empty()) s.set("n_grid", "20,40,80");
    if (s.str("reps").empty()) s.set("reps", "2");
  } else if (preset == "paper") {
    if (s.str("n_grid").empty()) s.set("n_grid", "100,200,400,800");
    if (s.str("reps").empty()) s.set("reps", "10");
  } else {
    throw ConfigError("key 'preset': unknown scaling preset '" + preset +
                      "' (valid: fastcheck, paper)");
  }
}

void cmd_scaling(const Settings& s, const Context& ctx) {
  std::vector<Index> grid;
  for (double v : s.reals("n_grid")) {
    if (!(v >= 1.0) || v != std::floor(v)) {
      throw ConfigError("key 'n_grid': entries must be positive integers");
    }
    grid.push_back(static_cast<Index>(v));
  }
  SimulationSpec templ;
  templ.s_star = s.integer("s_star");
  templ.noise = NoiseFamily::parse(s.str("noise"));
  templ.tau = tau_key(s, "tau");

  ScalingOptions options;
  options.d_ratio = s.real("d_ratio");
  if (!(*options.d_ratio > 0.0)) throw ConfigError("key 'd_ratio': must be positive");
  options.sampler = sampler_settings(s);
  options.protocol.baseline = baseline_settings(s);
  options.protocol.threads = ctx.threads;

  const int reps = static_cast<int>(s.integer("reps"));
  if (reps < 1) throw ConfigError("key 'reps': must be positive");
  const ScalingRecord rec =
      scaling_experiment(templ, grid, reps, derive_seed(s.u64("seed"), "scaling"), options);
  {
    auto os = open_out(ctx.out_dir / "scaling.csv");
    write_scaling_csv(os, rec);
  }
  {
    auto os = open_out(ctx.out_dir / "scaling.txt");
    write_scaling_summary(os, rec);
  }
  write_scaling_csv(ctx.out, rec);
  write_scaling_summary(ctx.out, rec);
}

// ---------------------------------------------------------------------------

struct Subcommand {
  std::string name;
  std::string help;
  std::vector<KeySpec> keys;
  bool out_required;
  void (*resolve)(Settings&);
  void (*handler)(const Settings&, const Context&);
};

std::vector<Subcommand> subcommands() {
  return {
      {"simulate", "run the simulation study on a preset", simulate_keys(), true,
       resolve_simulate, cmd_simulate},
      {"fit", "fit lmc, mala or lasso on a CSV", fit_keys(), true, nullptr, cmd_fit},
      {"split", "seeded train/test split of a CSV", split_keys(), true, nullptr,
       cmd_split},
      {"predict", "predict with a fitted model", predict_keys(), true, nullptr,
       cmd_predict},
      {"bounds", "evaluate rate terms and theoretical tuning", bounds_keys(), false,
       nullptr, cmd_bounds},
      {"scaling", "empirical mse scaling experiment", scaling_keys(), true,
       resolve_scaling, cmd_scaling},
  };
}

int execute(const Subcommand& sub, const std::map<std::string, std::string>& cli_values,
            const std::string& config_path, const std::string& out_dir, int threads,
            std::ostream& out) {
  std::map<std::string, std::string> values;
  for (const auto& k : sub.keys) values[k.key] = k.default_value;
  if (!config_path.empty()) {
    const ConfigFile file = parse_config(fs::path(config_path));
    const auto sub_it = file.values.find("subcommand");
    if (sub_it != file.values.end() && sub_it->second != sub.name) {
      throw ConfigError("config was written for '" + sub_it->second +
                        "', not '" + sub.name + "'");
    }
    for (const auto& [k, v] : file.values) {
      if (kMetadataKeys.contains(k)) continue;
      if (!values.contains(k)) {
        throw ConfigError("config key '" + k + "' is not valid for " + sub.name);
      }
      values[k] = v;
    }
  }
  for (const auto& [k, v] : cli_values) values[k] = v;
  Settings settings(std::move(values));
  if (sub.resolve != nullptr) sub.resolve(settings);

  fs::path dir;
  if (!out_dir.empty()) {
    dir = out_dir;
    ensure_dir(dir);
  } else if (sub.out_required) {
    throw ConfigError("--out is required for " + sub.name);
  }
  if (threads < 1) throw ConfigError("--threads must be at least 1");
  Context ctx{dir, threads, out};
  sub.handler(settings, ctx);
  if (!dir.empty()) write_manifest(dir, sub.name, sub.keys, settings);
  return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const auto subs = subcommands();
  CLI::App app{"Sparse Gibbs-posterior quantile regression"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  app.footer(
      "Configuration: --config FILE reads flat key = value pairs grouped in\n"
      "[Section] blocks; every key is also a flag of the same name and flags\n"
      "win over the file. Each output directory gets manifest.cfg, which\n"
      "reproduces the run: qgibbs replay DIR/manifest.cfg --out NEWDIR.\n"
      "Exit codes: 0 ok, 2 configuration, 3 runtime (e.g. divergence), 4 I/O.");

  struct Parsed {
    std::map<std::string, std::string> raw;
    std::string config, out_dir;
    int threads = 1;
  };
  std::vector<Parsed> parsed(subs.size());
  std::vector<CLI::App*> handles;
  for (std::size_t i = 0; i < subs.size(); ++i) {
    CLI::App* sc = app.add_subcommand(subs[i].name, subs[i].help);
    for (const auto& k : subs[i].keys) {
      std::string flags = "--" + k.key;
      if (!k.alias.empty()) flags += ",--" + k.alias;
      std::string help = k.help + " [" + k.section + "]";
      if (!k.default_value.empty()) help += " (default: " + k.default_value + ")";
      sc->add_option(flags, parsed[i].raw[k.key], help);
    }
    sc->add_option("--config", parsed[i].config, "key = value configuration file");
    sc->add_option("--out", parsed[i].out_dir, "output directory");
    sc->add_option("--threads", parsed[i].threads, "worker threads (outputs do not depend on it)");
    handles.push_back(sc);
  }
  std::string replay_manifest, replay_out;
  int replay_threads = 1;
  CLI::App* replay = app.add_subcommand("replay", "re-run the command recorded in a manifest");
  replay->add_option("manifest", replay_manifest, "manifest.cfg")->required();
  replay->add_option("--out", replay_out, "output directory")->required();
  replay->add_option("--threads", replay_threads, "worker threads");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kConfigError;
  }

  try {
    if (replay->parsed()) {
      const ConfigFile m = parse_config(fs::path(replay_manifest));
      const auto it = m.values.find("subcommand");
      if (it == m.values.end()) throw ConfigError("manifest has no subcommand");
      for (const auto& sub : subs) {
        if (sub.name == it->second) {
          return execute(sub, {}, replay_manifest, replay_out, replay_threads, out);
        }
      }
      throw ConfigError("manifest names unknown subcommand '" + it->second + "'");
    }
    for (std::size_t i = 0; i < subs.size(); ++i) {
      if (!handles[i]->parsed()) continue;
      std::map<std::string, std::string> given;
      for (const auto& k : subs[i].keys) {
        if (handles[i]->count("--" + k.key) > 0) given[k.key] = parsed[i].raw[k.key];
      }
      return execute(subs[i], given, parsed[i].config, parsed[i].out_dir,
                     parsed[i].threads, out);
    }
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kConfigError;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kIoError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kConfigError;
}

}  // namespace qgibbs::cli
