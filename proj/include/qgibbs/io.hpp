#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qgibbs/loss.hpp"

namespace qgibbs {

struct CsvTable {
  std::vector<std::string> header;
  Matrix values;  // rows x header.size()
};

/// Numeric CSV with a header row. Blank or non-numeric cells raise a
/// ParseError naming the 1-based file line and the column.
CsvTable read_csv_table(std::istream& is);
CsvTable read_csv_table(const std::filesystem::path& path);

/// y from `response`, x from the remaining columns in header order.
Dataset load_csv(const std::filesystem::path& path, const std::string& response,
                 std::vector<std::string>* covariate_names = nullptr);

/// Covariates first (named x1..xd when names are empty), response last.
void write_csv(std::ostream& os, const Dataset& data,
               const std::vector<std::string>& covariate_names = {},
               const std::string& response = "y");

struct StandardizationParams {
  Vector x_mean;
  Vector x_sd;
  double y_mean = 0.0;
  double y_sd = 1.0;
  bool log_response = false;

  static StandardizationParams identity(Index d);

  Matrix transform_x(const Matrix& x) const;
  Vector transform_y(const Vector& y) const;
  /// Back to original response units (exp applied under log_response).
  Vector inverse_y(const Vector& z) const;
  Dataset apply(const Dataset& data) const;

  /// x_raw in original units -> predictions x_std * theta in response units.
  Vector predict(const Matrix& x_raw, const Vector& theta) const;
};

/// Column statistics of `data` (population sd, divisor n).
StandardizationParams fit_standardization(const Dataset& data, bool log_response);

/// Fits on `data` and applies to it.
std::pair<Dataset, StandardizationParams> standardize(const Dataset& data,
                                                      bool log_response);

void write_params(std::ostream& os, const StandardizationParams& params,
                  const std::vector<std::string>& covariate_names = {});
StandardizationParams read_params(const std::filesystem::path& path,
                                  std::vector<std::string>* covariate_names = nullptr);

struct SplitSpec {
  std::optional<double> train_fraction;
  std::optional<Index> train_count;
  std::optional<Index> test_count;
  std::uint64_t seed = 0;
};

struct SplitIndices {
  std::vector<Index> train;
  std::vector<Index> test;
};

SplitIndices split_indices(Index n, const SplitSpec& spec);
std::pair<Dataset, Dataset> split(const Dataset& data, const SplitSpec& spec);

/// Indices of the k covariates with the largest absolute Pearson correlation
/// with y, ascending by column index.
std::vector<Index> top_correlated(const Dataset& data, Index k);
Dataset select_columns(const Dataset& data, const std::vector<Index>& columns);

/// Flat key=value configuration with [Section] headers. '#' starts a comment.
struct ConfigFile {
  std::map<std::string, std::string> values;
  std::map<std::string, std::string> section_of;
};

ConfigFile parse_config(std::istream& is);
ConfigFile parse_config(const std::filesystem::path& path);

using ConfigSection =
    std::pair<std::string, std::vector<std::pair<std::string, std::string>>>;
void write_config(std::ostream& os, const std::vector<ConfigSection>& sections);

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace qgibbs
