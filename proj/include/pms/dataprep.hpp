#pragma once

#include "pms/types.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pms {

enum class Frequency { kMonthly, kQuarterly };

/// Dated series. Quarterly dates are the first month of the quarter.
struct Series
{
  std::vector<YearMonth> dates;
  std::vector<double> values;
  Frequency frequency = Frequency::kMonthly;

  std::size_t size() const { return values.size(); }
  /// Dates strictly increasing with no gaps at the series frequency.
  void validate(const std::string& what) const;
};

/// 100 * (v_t - v_{t-1}) / v_{t-1}; one observation shorter.
Series growth_rate(const Series& levels);

enum class Aggregation { kSum, kAverage };
Aggregation parse_aggregation(const std::string& name);

struct ChowLinOptions
{
  Aggregation aggregation = Aggregation::kAverage;
  bool add_constant = false;
  std::optional<double> fixed_rho; // skip the grid search
};

struct ChowLinResult
{
  Series monthly;
  double rho = 0.0;
  Eigen::VectorXd beta;
  Eigen::VectorXd quarterly_residual;
  double loglik = 0.0;
};

/// Monthly disaggregation of a quarterly series by GLS on the quarterly
/// aggregates of the indicators, AR(1) residuals with rho picked by maximum
/// likelihood on 0.00, 0.01, ..., 0.99. Output covers the target's quarters.
ChowLinResult chow_lin(const Series& target, const std::vector<Series>& indicators, const ChowLinOptions& options = {});

struct SpiTransformSpec
{
  enum class Variant { kDichotomy, kCdf, kConditionalCdfTails, kThresholdTails };
  Variant variant = Variant::kDichotomy;
  double a = -1.0;
  double b = 1.0;
  double dichotomy_threshold = -0.5;

  void validate() const;
  /// Output column suffixes: {""} for single-series variants, {"_dry", "_wet"} otherwise.
  std::vector<std::string> suffixes() const;
  static Variant parse_variant(const std::string& name);
  static std::string variant_name(Variant v);
};

/// One series for dichotomy/cdf, a (dry, wet) pair for the tail variants.
std::vector<Series> spi_transform(const Series& spi, const SpiTransformSpec& spec);

/// OLS of the target on the proxy over their overlap; target dates before
/// the overlap are filled with fitted values. Output spans the proxy start
/// to the target end.
Series backcast_missing(const Series& full_proxy, const Series& partial_target);

struct UnitInput
{
  std::string label;
  Series y;
  std::vector<Series> covariates; // same order as PanelInputs::bc_covariate_names
};

struct PanelInputs
{
  std::vector<UnitInput> units;
  std::vector<std::string> bc_covariate_names; // without the intercept
  Series x;
  std::vector<Series> fc_covariates;
  std::vector<std::string> fc_covariate_names; // without the intercept
};

/// Aligns every series on the common dates, prepends intercept columns and
/// validates the result.
PanelDataset assemble_panel(const PanelInputs& inputs);

// ---------------------------------------------------------------------------
// Raw CSV inputs.

struct PrepareOptions
{
  std::filesystem::path input_dir;
  SpiTransformSpec spi;
  bool panel_growth = true;     // panel.csv holds levels
  bool financial_growth = true; // financial.csv / quarterly.csv hold levels
  Aggregation chow_lin_aggregation = Aggregation::kAverage;
  std::vector<std::string> covariates; // subset of covariates.csv columns; empty = all
  std::map<std::string, std::string> backcast; // target unit -> proxy (panel unit or proxies.csv)
  std::optional<YearMonth> start, end;
};

/// Series in order of first appearance.
using NamedSeries = std::vector<std::pair<std::string, Series>>;

/// Long format: date, <key_column>, <value_column>.
NamedSeries read_long_series(const std::filesystem::path& path, const std::string& key_column,
                             const std::string& value_column = "value");
/// date plus one column per series.
NamedSeries read_wide_series(const std::filesystem::path& path, Frequency frequency = Frequency::kMonthly);
/// date, value.
Series read_single_series(const std::filesystem::path& path, Frequency frequency = Frequency::kMonthly);

/// Reads panel.csv, covariates.csv and financial.csv (or quarterly.csv plus
/// indicators.csv) from `options.input_dir`, with financial_covariates.csv
/// optional, and builds the dataset.
PanelDataset prepare_dataset(const PrepareOptions& options);

} // namespace pms
