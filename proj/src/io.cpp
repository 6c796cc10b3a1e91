#include "qgibbs/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "qgibbs/error.hpp"
#include "qgibbs/rng.hpp"

namespace qgibbs {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

CsvTable read_csv_table(std::istream& is) {
  CsvTable t;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  if (line_no == 0 || trim(line).empty()) {
    throw ParseError("CSV: missing header row", line_no, 0);
  }
  t.header = split_line(line);
  const auto cols = t.header.size();
  for (std::size_t j = 0; j < cols; ++j) {
    if (t.header[j].empty()) {
      throw ParseError("CSV: empty column name at column " +
                           std::to_string(j + 1),
                       line_no, static_cast<std::int64_t>(j + 1));
    }
  }

  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != cols) {
      throw ParseError("CSV line " + std::to_string(line_no) + ": expected " +
                           std::to_string(cols) + " cells, found " +
                           std::to_string(cells.size()),
                       line_no, 0);
    }
    std::vector<double> row(cols);
    for (std::size_t j = 0; j < cols; ++j) {
      const std::string& c = cells[j];
      const auto where = [&] {
        return "CSV line " + std::to_string(line_no) + ", column '" +
               t.header[j] + "' (" + std::to_string(j + 1) + ")";
      };
      if (c.empty()) {
        throw ParseError(where() + ": missing value", line_no,
                         static_cast<std::int64_t>(j + 1));
      }
      const char* first = c.data();
      if (*first == '+') ++first;
      const auto res = std::from_chars(first, c.data() + c.size(), row[j]);
      if (res.ec != std::errc() || res.ptr != c.data() + c.size() ||
          !std::isfinite(row[j])) {
        throw ParseError(where() + ": non-numeric value '" + c + "'", line_no,
                         static_cast<std::int64_t>(j + 1));
      }
    }
    rows.push_back(std::move(row));
  }
  t.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(cols));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      t.values(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    }
  }
  return t;
}

CsvTable read_csv_table(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_csv_table(in);
}

Dataset load_csv(const std::filesystem::path& path, const std::string& response,
                 std::vector<std::string>* covariate_names) {
  const CsvTable t = read_csv_table(path);
  const auto it = std::find(t.header.begin(), t.header.end(), response);
  if (it == t.header.end()) {
    throw IoError("'" + path.string() + "' has no response column '" +
                  response + "'");
  }
  const auto ycol = static_cast<Index>(it - t.header.begin());
  if (t.values.rows() == 0) throw IoError("'" + path.string() + "' has no rows");
  if (t.header.size() < 2) {
    throw IoError("'" + path.string() + "' has no covariate columns");
  }
  Matrix x(t.values.rows(), t.values.cols() - 1);
  std::vector<std::string> names;
  Index k = 0;
  for (Index j = 0; j < t.values.cols(); ++j) {
    if (j == ycol) continue;
    x.col(k++) = t.values.col(j);
    names.push_back(t.header[static_cast<std::size_t>(j)]);
  }
  if (covariate_names != nullptr) *covariate_names = std::move(names);
  return Dataset(std::move(x), t.values.col(ycol));
}

void write_csv(std::ostream& os, const Dataset& data,
               const std::vector<std::string>& covariate_names,
               const std::string& response) {
  for (Index j = 0; j < data.d(); ++j) {
    os << (covariate_names.empty() ? "x" + std::to_string(j + 1)
                                   : covariate_names.at(static_cast<std::size_t>(j)))
       << ',';
  }
  os << response << '\n';
  for (Index i = 0; i < data.n(); ++i) {
    for (Index j = 0; j < data.d(); ++j) os << format_double(data.x()(i, j)) << ',';
    os << format_double(data.y()[i]) << '\n';
  }
}

StandardizationParams StandardizationParams::identity(Index d) {
  StandardizationParams p;
  p.x_mean = Vector::Zero(d);
  p.x_sd = Vector::Ones(d);
  return p;
}

Matrix StandardizationParams::transform_x(const Matrix& x) const {
  if (x.cols() != x_mean.size()) {
    throw ShapeError("covariate count " + std::to_string(x.cols()) +
                     " does not match the fitted " +
                     std::to_string(x_mean.size()));
  }
  return ((x.rowwise() - x_mean.transpose()).array().rowwise() /
          x_sd.transpose().array())
      .matrix();
}

Vector StandardizationParams::transform_y(const Vector& y) const {
  Vector v = y;
  if (log_response) {
    if ((v.array() <= 0.0).any()) {
      throw DomainError("log_response requires a strictly positive response");
    }
    v = v.array().log().matrix();
  }
  return ((v.array() - y_mean) / y_sd).matrix();
}

Vector StandardizationParams::inverse_y(const Vector& z) const {
  Vector v = (z.array() * y_sd + y_mean).matrix();
  if (log_response) v = v.array().exp().matrix();
  return v;
}

Dataset StandardizationParams::apply(const Dataset& data) const {
  return Dataset(transform_x(data.x()), transform_y(data.y()));
}

Vector StandardizationParams::predict(const Matrix& x_raw,
                                     const Vector& theta) const {
  if (theta.size() != x_mean.size()) {
    throw ShapeError("model has " + std::to_string(theta.size()) +
                     " coefficients but " + std::to_string(x_mean.size()) +
                     " covariate transforms");
  }
  return inverse_y(transform_x(x_raw) * theta);
}

StandardizationParams fit_standardization(const Dataset& data,
                                          bool log_response) {
  StandardizationParams p;
  p.log_response = log_response;
  const double n = static_cast<double>(data.n());
  p.x_mean = data.x().colwise().mean().transpose();
  p.x_sd.resize(data.d());
  for (Index j = 0; j < data.d(); ++j) {
    const double sd =
        std::sqrt((data.x().col(j).array() - p.x_mean[j]).square().sum() / n);
    if (!(sd > 0.0)) {
      throw DomainError("covariate column " + std::to_string(j + 1) +
                        " is constant");
    }
    p.x_sd[j] = sd;
  }
  Vector y = data.y();
  if (log_response) {
    if ((y.array() <= 0.0).any()) {
      throw DomainError("log_response requires a strictly positive response");
    }
    y = y.array().log().matrix();
  }
  p.y_mean = y.mean();
  p.y_sd = std::sqrt((y.array() - p.y_mean).square().sum() / n);
  if (!(p.y_sd > 0.0)) throw DomainError("response is constant");
  return p;
}

std::pair<Dataset, StandardizationParams> standardize(const Dataset& data,
                                                      bool log_response) {
  StandardizationParams p = fit_standardization(data, log_response);
  return {p.apply(data), std::move(p)};
}

void write_params(std::ostream& os, const StandardizationParams& params,
                  const std::vector<std::string>& covariate_names) {
  os << "role,name,mean,sd\n";
  os << "y," << (params.log_response ? "log" : "identity") << ','
     << format_double(params.y_mean) << ',' << format_double(params.y_sd) << '\n';
  for (Index j = 0; j < params.x_mean.size(); ++j) {
    os << "x,"
       << (covariate_names.empty() ? "x" + std::to_string(j + 1)
                                   : covariate_names.at(static_cast<std::size_t>(j)))
       << ',' << format_double(params.x_mean[j]) << ','
       << format_double(params.x_sd[j]) << '\n';
  }
}

StandardizationParams read_params(const std::filesystem::path& path,
                                  std::vector<std::string>* covariate_names) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || trim(line) != "role,name,mean,sd") {
    throw ParseError("params file '" + path.string() + "': bad header", 1, 0);
  }
  StandardizationParams p;
  std::vector<double> means, sds;
  std::vector<std::string> names;
  bool have_y = false;
  std::int64_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != 4) {
      throw ParseError("params file: expected 4 cells", line_no, 0);
    }
    double mean = 0.0, sd = 0.0;
    try {
      mean = std::stod(cells[2]);
      sd = std::stod(cells[3]);
    } catch (const std::exception&) {
      throw ParseError("params file: non-numeric value", line_no, 3);
    }
    if (!(sd > 0.0)) throw ParseError("params file: sd must be positive", line_no, 4);
    if (cells[0] == "y") {
      p.log_response = cells[1] == "log";
      p.y_mean = mean;
      p.y_sd = sd;
      have_y = true;
    } else if (cells[0] == "x") {
      means.push_back(mean);
      sds.push_back(sd);
      names.push_back(cells[1]);
    } else {
      throw ParseError("params file: unknown role '" + cells[0] + "'", line_no, 1);
    }
  }
  if (!have_y || means.empty()) {
    throw IoError("params file '" + path.string() + "' is incomplete");
  }
  p.x_mean = Eigen::Map<Vector>(means.data(), static_cast<Index>(means.size()));
  p.x_sd = Eigen::Map<Vector>(sds.data(), static_cast<Index>(sds.size()));
  if (covariate_names != nullptr) *covariate_names = std::move(names);
  return p;
}

SplitIndices split_indices(Index n, const SplitSpec& spec) {
  Index n_train = 0;
  if (spec.train_count || spec.test_count) {
    if (!spec.train_count || !spec.test_count) {
      throw ConfigError("split needs both train_count and test_count");
    }
    n_train = *spec.train_count;
    if (n_train < 1 || *spec.test_count < 1 || n_train + *spec.test_count != n) {
      throw ConfigError("split counts " + std::to_string(n_train) + " + " +
                        std::to_string(*spec.test_count) +
                        " must be positive and sum to " + std::to_string(n));
    }
  } else if (spec.train_fraction) {
    const double f = *spec.train_fraction;
    if (!(f > 0.0 && f < 1.0)) {
      throw ConfigError("train_fraction must lie in (0, 1)");
    }
    n_train = static_cast<Index>(std::llround(f * static_cast<double>(n)));
    if (n_train < 1 || n_train >= n) {
      throw ConfigError("train_fraction leaves an empty train or test set");
    }
  } else {
    throw ConfigError("split needs train_fraction or explicit counts");
  }
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  Rng rng(spec.seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  SplitIndices out;
  out.train.assign(perm.begin(), perm.begin() + n_train);
  out.test.assign(perm.begin() + n_train, perm.end());
  return out;
}

std::pair<Dataset, Dataset> split(const Dataset& data, const SplitSpec& spec) {
  const SplitIndices idx = split_indices(data.n(), spec);
  return {data.rows(idx.train), data.rows(idx.test)};
}

std::vector<Index> top_correlated(const Dataset& data, Index k) {
  if (k < 1 || k > data.d()) {
    throw ConfigError("top-corr k must lie in [1, d]");
  }
  const Vector yc = (data.y().array() - data.y().mean()).matrix();
  const double ynorm = yc.norm();
  std::vector<std::pair<double, Index>> score;
  for (Index j = 0; j < data.d(); ++j) {
    const Vector xc = (data.x().col(j).array() - data.x().col(j).mean()).matrix();
    const double denom = xc.norm() * ynorm;
    score.emplace_back(denom > 0.0 ? std::abs(xc.dot(yc)) / denom : 0.0, j);
  }
  std::stable_sort(score.begin(), score.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<Index> out;
  for (Index i = 0; i < k; ++i) out.push_back(score[static_cast<std::size_t>(i)].second);
  std::sort(out.begin(), out.end());
  return out;
}

Dataset select_columns(const Dataset& data, const std::vector<Index>& columns) {
  Matrix x(data.n(), static_cast<Index>(columns.size()));
  for (std::size_t k = 0; k < columns.size(); ++k) {
    x.col(static_cast<Index>(k)) = data.x().col(columns[k]);
  }
  return Dataset(std::move(x), data.y());
}

ConfigFile parse_config(std::istream& is) {
  static const std::set<std::string> kSections = {
      "Run", "Data", "GibbsConfig", "SamplerConfig", "LassoConfig",
      "SimulationSpec", "SplitSpec", "Bounds", "Scaling"};
  ConfigFile cfg;
  std::string section;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ParseError("config line " + std::to_string(line_no) +
                             ": malformed section header",
                         line_no, 0);
      }
      section = trim(line.substr(1, line.size() - 2));
      if (!kSections.contains(section)) {
        throw ConfigError("config line " + std::to_string(line_no) +
                          ": unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError("config line " + std::to_string(line_no) +
                           ": expected key = value",
                       line_no, 0);
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ParseError("config line " + std::to_string(line_no) + ": empty key",
                       line_no, 0);
    }
    if (cfg.values.contains(key)) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": duplicate key '" + key + "'");
    }
    cfg.values[key] = value;
    cfg.section_of[key] = section;
  }
  return cfg;
}

ConfigFile parse_config(const std::filesystem::path& path) {
  auto in = open_in(path);
  return parse_config(in);
}

void write_config(std::ostream& os, const std::vector<ConfigSection>& sections) {
  bool first = true;
  for (const auto& [name, entries] : sections) {
    if (entries.empty()) continue;
    if (!first) os << '\n';
    first = false;
    os << '[' << name << "]\n";
    for (const auto& [k, v] : entries) os << k << " = " << v << '\n';
  }
}

}  // namespace qgibbs
