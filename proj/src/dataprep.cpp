#include "pms/dataprep.hpp"

#include "pms/io.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <set>

namespace pms {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

int step_of(Frequency f) { return f == Frequency::kQuarterly ? 3 : 1; }

double normal_cdf(double s) { return 0.5 * std::erfc(-s / std::sqrt(2.0)); }
double normal_sf(double s) { return 0.5 * std::erfc(s / std::sqrt(2.0)); }

void check_increasing(const Series& s, const std::string& what)
{
  if (s.dates.size() != s.values.size()) throw InputError(what + ": dates and values differ in length");
  for (std::size_t k = 1; k < s.dates.size(); ++k) {
    if (s.dates[k] == s.dates[k - 1]) throw InputError(what + ": duplicated date " + s.dates[k].str());
    if (s.dates[k] < s.dates[k - 1]) throw InputError(what + ": dates not increasing at " + s.dates[k].str());
  }
}

Series trim(const Series& s, const std::optional<YearMonth>& start, const std::optional<YearMonth>& end)
{
  Series out;
  out.frequency = s.frequency;
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (start && s.dates[k] < *start) continue;
    if (end && *end < s.dates[k]) continue;
    out.dates.push_back(s.dates[k]);
    out.values.push_back(s.values[k]);
  }
  return out;
}

} // namespace

void Series::validate(const std::string& what) const
{
  check_increasing(*this, what);
  const int step = step_of(frequency);
  for (std::size_t k = 1; k < dates.size(); ++k) {
    if (dates[k].index() - dates[k - 1].index() != step) {
      throw InputError(what + ": gap between " + dates[k - 1].str() + " and " + dates[k].str());
    }
  }
  if (frequency == Frequency::kQuarterly) {
    for (const auto& d : dates) {
      if ((d.month - 1) % 3 != 0) throw InputError(what + ": quarterly date " + d.str() + " is not a quarter start");
    }
  }
}

Series growth_rate(const Series& levels)
{
  levels.validate("growth_rate input");
  Series out;
  out.frequency = levels.frequency;
  for (std::size_t k = 1; k < levels.size(); ++k) {
    const double prev = levels.values[k - 1];
    if (prev == 0.0) throw InputError("growth_rate: zero level at " + levels.dates[k - 1].str());
    out.dates.push_back(levels.dates[k]);
    out.values.push_back(100.0 * (levels.values[k] - prev) / prev);
  }
  return out;
}

Aggregation parse_aggregation(const std::string& name)
{
  if (name == "sum") return Aggregation::kSum;
  if (name == "average") return Aggregation::kAverage;
  throw InputError("unknown aggregation '" + name + "' (expected sum or average)");
}

// ---------------------------------------------------------------------------

ChowLinResult chow_lin(const Series& target, const std::vector<Series>& indicators, const ChowLinOptions& options)
{
  if (target.frequency != Frequency::kQuarterly) throw InputError("chow_lin: target must be quarterly");
  target.validate("chow_lin target");
  if (target.size() < 2) throw InputError("chow_lin: need at least two quarters");
  for (double v : target.values) {
    if (!std::isfinite(v)) throw InputError("chow_lin: non-finite target value");
  }
  const auto nq = static_cast<Eigen::Index>(target.size());
  const Eigen::Index n = 3 * nq;
  const YearMonth m0 = target.dates.front();

  const Eigen::Index k = static_cast<Eigen::Index>(indicators.size()) + (options.add_constant ? 1 : 0);
  if (k == 0) throw InputError("chow_lin: no indicators");
  if (k >= nq) throw InputError("chow_lin: more regressors than quarters");
  Eigen::MatrixXd x(n, k);
  Eigen::Index col = 0;
  if (options.add_constant) x.col(col++).setOnes();
  for (std::size_t j = 0; j < indicators.size(); ++j, ++col) {
    const Series& ind = indicators[j];
    if (ind.frequency != Frequency::kMonthly) throw InputError("chow_lin: indicators must be monthly");
    ind.validate("chow_lin indicator " + std::to_string(j + 1));
    if (ind.dates.empty() || m0 < ind.dates.front() || ind.dates.back() < m0.plus(static_cast<int>(n - 1))) {
      throw InputError("chow_lin: indicator " + std::to_string(j + 1) + " does not cover " + m0.str() + " to " +
                       m0.plus(static_cast<int>(n - 1)).str());
    }
    const auto off = static_cast<std::size_t>(m0.index() - ind.dates.front().index());
    for (Eigen::Index t = 0; t < n; ++t) {
      const double v = ind.values[off + static_cast<std::size_t>(t)];
      if (!std::isfinite(v)) throw InputError("chow_lin: non-finite indicator value at " + m0.plus(static_cast<int>(t)).str());
      x(t, col) = v;
    }
  }

  const double c = options.aggregation == Aggregation::kSum ? 1.0 : 1.0 / 3.0;
  auto aggregate_rows = [&](const Eigen::MatrixXd& m) {
    Eigen::MatrixXd out(nq, m.cols());
    for (Eigen::Index q = 0; q < nq; ++q) out.row(q) = c * (m.row(3 * q) + m.row(3 * q + 1) + m.row(3 * q + 2));
    return out;
  };
  const Eigen::MatrixXd xq = aggregate_rows(x);
  const Eigen::Map<const Eigen::VectorXd> yq(target.values.data(), nq);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xq);
  if (qr.rank() < k) throw InputError("chow_lin: rank-deficient indicator matrix");

  struct Fit
  {
    double rho, loglik;
    Eigen::VectorXd beta, u, wu;
    Eigen::MatrixXd vct;
  };
  auto fit = [&](double rho) {
    // V_ij = rho^|i-j| / (1 - rho^2); V C' and C V C' by summing columns/rows.
    Eigen::VectorXd powers(n);
    powers(0) = 1.0 / (1.0 - rho * rho);
    for (Eigen::Index d = 1; d < n; ++d) powers(d) = powers(d - 1) * rho;
    Eigen::MatrixXd v(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) v(i, j) = powers(std::abs(i - j));
    }
    Fit f;
    f.rho = rho;
    f.vct.resize(n, nq);
    for (Eigen::Index q = 0; q < nq; ++q) f.vct.col(q) = c * (v.col(3 * q) + v.col(3 * q + 1) + v.col(3 * q + 2));
    const Eigen::MatrixXd vq = aggregate_rows(f.vct);
    Eigen::LLT<Eigen::MatrixXd> llt(vq);
    if (llt.info() != Eigen::Success) throw NumericalError("chow_lin: aggregated covariance not positive definite");
    const Eigen::MatrixXd wx = llt.solve(xq);
    Eigen::LLT<Eigen::MatrixXd> normal(xq.transpose() * wx);
    if (normal.info() != Eigen::Success) throw InputError("chow_lin: rank-deficient indicator matrix");
    f.beta = normal.solve(wx.transpose() * yq);
    f.u = yq - xq * f.beta;
    f.wu = llt.solve(f.u);
    const double s2 = std::max(f.u.dot(f.wu) / static_cast<double>(nq), std::numeric_limits<double>::min());
    double logdet = 0.0;
    for (Eigen::Index q = 0; q < nq; ++q) logdet += 2.0 * std::log(llt.matrixL()(q, q));
    f.loglik = -0.5 * static_cast<double>(nq) * (std::log(2.0 * M_PI * s2) + 1.0) - 0.5 * logdet;
    return f;
  };

  Fit best;
  if (options.fixed_rho) {
    if (!(*options.fixed_rho >= 0.0 && *options.fixed_rho < 1.0)) throw InputError("chow_lin: rho must lie in [0, 1)");
    best = fit(*options.fixed_rho);
  } else {
    best = fit(0.0);
    for (int g = 1; g <= 99; ++g) {
      Fit f = fit(g / 100.0);
      if (f.loglik > best.loglik) best = std::move(f);
    }
  }

  const Eigen::VectorXd monthly = x * best.beta + best.vct * best.wu;
  ChowLinResult r;
  r.rho = best.rho;
  r.beta = best.beta;
  r.quarterly_residual = best.u;
  r.loglik = best.loglik;
  r.monthly.frequency = Frequency::kMonthly;
  for (Eigen::Index t = 0; t < n; ++t) {
    r.monthly.dates.push_back(m0.plus(static_cast<int>(t)));
    r.monthly.values.push_back(monthly(t));
  }
  return r;
}

// ---------------------------------------------------------------------------

void SpiTransformSpec::validate() const
{
  if (!(a < b)) throw InputError("spi transform: threshold a must be below b");
  if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(dichotomy_threshold)) {
    throw InputError("spi transform: thresholds must be finite");
  }
}

std::vector<std::string> SpiTransformSpec::suffixes() const
{
  if (variant == Variant::kDichotomy || variant == Variant::kCdf) return {""};
  return {"_dry", "_wet"};
}

SpiTransformSpec::Variant SpiTransformSpec::parse_variant(const std::string& name)
{
  if (name == "dichotomy") return Variant::kDichotomy;
  if (name == "cdf") return Variant::kCdf;
  if (name == "conditional_cdf_tails") return Variant::kConditionalCdfTails;
  if (name == "threshold_tails") return Variant::kThresholdTails;
  throw InputError("unknown SPI transform '" + name + "'");
}

std::string SpiTransformSpec::variant_name(Variant v)
{
  switch (v) {
    case Variant::kDichotomy: return "dichotomy";
    case Variant::kCdf: return "cdf";
    case Variant::kConditionalCdfTails: return "conditional_cdf_tails";
    case Variant::kThresholdTails: return "threshold_tails";
  }
  return "?";
}

std::vector<Series> spi_transform(const Series& spi, const SpiTransformSpec& spec)
{
  spec.validate();
  using V = SpiTransformSpec::Variant;
  Series first{spi.dates, {}, spi.frequency};
  Series second{spi.dates, {}, spi.frequency};
  const double fa = normal_cdf(spec.a);
  const double sb = normal_sf(spec.b);
  for (double s : spi.values) {
    if (std::isnan(s)) {
      first.values.push_back(kNaN);
      second.values.push_back(kNaN);
      continue;
    }
    switch (spec.variant) {
      case V::kDichotomy: first.values.push_back(s < spec.dichotomy_threshold ? 1.0 : 0.0); break;
      case V::kCdf: first.values.push_back(normal_cdf(s)); break;
      case V::kConditionalCdfTails:
        first.values.push_back(s < spec.a ? 1.0 - normal_cdf(s) / fa : 0.0);
        second.values.push_back(s > spec.b ? 1.0 - normal_sf(s) / sb : 0.0);
        break;
      case V::kThresholdTails:
        first.values.push_back(s < spec.a ? spec.a - s : 0.0);
        second.values.push_back(s > spec.b ? s - spec.b : 0.0);
        break;
    }
  }
  if (spec.variant == V::kDichotomy || spec.variant == V::kCdf) return {first};
  return {first, second};
}

// ---------------------------------------------------------------------------

Series backcast_missing(const Series& full_proxy, const Series& partial_target)
{
  full_proxy.validate("backcast proxy");
  partial_target.validate("backcast target");
  if (partial_target.dates.empty() || full_proxy.dates.empty()) throw InputError("backcast: empty series");
  const YearMonth p0 = full_proxy.dates.front();
  if (partial_target.dates.front() < p0 || full_proxy.dates.back() < partial_target.dates.front()) {
    throw InputError("backcast: target must start within the proxy span");
  }
  const auto off = static_cast<std::size_t>(partial_target.dates.front().index() - p0.index());

  std::vector<double> px, ty;
  for (std::size_t k = 0; k < partial_target.size() && off + k < full_proxy.size(); ++k) {
    const double a = full_proxy.values[off + k];
    const double b = partial_target.values[k];
    if (std::isfinite(a) && std::isfinite(b)) {
      px.push_back(a);
      ty.push_back(b);
    }
  }
  if (px.size() < 3) throw InputError("backcast: overlap shorter than 3 points");
  const auto n = static_cast<double>(px.size());
  const double mx = std::accumulate(px.begin(), px.end(), 0.0) / n;
  const double my = std::accumulate(ty.begin(), ty.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < px.size(); ++k) {
    sxx += (px[k] - mx) * (px[k] - mx);
    sxy += (px[k] - mx) * (ty[k] - my);
  }
  if (!(sxx > 1e-12 * std::max(1.0, mx * mx) * n)) throw InputError("backcast: proxy is constant on the overlap (rank deficient)");
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;

  Series out;
  for (std::size_t k = 0; k < off; ++k) {
    out.dates.push_back(full_proxy.dates[k]);
    out.values.push_back(intercept + slope * full_proxy.values[k]);
  }
  out.dates.insert(out.dates.end(), partial_target.dates.begin(), partial_target.dates.end());
  out.values.insert(out.values.end(), partial_target.values.begin(), partial_target.values.end());
  return out;
}

// ---------------------------------------------------------------------------

PanelDataset assemble_panel(const PanelInputs& in)
{
  if (in.units.empty()) throw InputError("assemble_panel: no units");
  std::vector<std::pair<std::string, const Series*>> all;
  for (const auto& u : in.units) {
    if (u.covariates.size() != in.bc_covariate_names.size()) {
      throw InputError("assemble_panel: unit " + u.label + " has " + std::to_string(u.covariates.size()) +
                       " covariates, expected " + std::to_string(in.bc_covariate_names.size()));
    }
    all.emplace_back("y/" + u.label, &u.y);
    for (std::size_t c = 0; c < u.covariates.size(); ++c) all.emplace_back(u.label + "/" + in.bc_covariate_names[c], &u.covariates[c]);
  }
  if (in.fc_covariates.size() != in.fc_covariate_names.size()) throw InputError("assemble_panel: financial covariate names do not match");
  all.emplace_back("x", &in.x);
  for (std::size_t c = 0; c < in.fc_covariates.size(); ++c) all.emplace_back("FIN/" + in.fc_covariate_names[c], &in.fc_covariates[c]);

  std::set<YearMonth> common;
  bool first = true;
  for (const auto& [name, s] : all) {
    if (s->frequency != Frequency::kMonthly) throw InputError("assemble_panel: " + name + " is not monthly");
    check_increasing(*s, name);
    std::set<YearMonth> here(s->dates.begin(), s->dates.end());
    if (first) {
      common = std::move(here);
      first = false;
    } else {
      std::set<YearMonth> keep;
      std::set_intersection(common.begin(), common.end(), here.begin(), here.end(), std::inserter(keep, keep.end()));
      common = std::move(keep);
    }
  }
  if (common.empty()) throw InputError("assemble_panel: series share no dates");
  const std::vector<YearMonth> dates(common.begin(), common.end());
  for (std::size_t k = 1; k < dates.size(); ++k) {
    if (dates[k].index() != dates[k - 1].index() + 1) {
      throw InputError("assemble_panel: misaligned series, common dates jump from " + dates[k - 1].str() + " to " + dates[k].str());
    }
  }
  const auto T = static_cast<Eigen::Index>(dates.size());

  auto aligned = [&](const std::string& name, const Series& s) {
    Eigen::VectorXd v(T);
    std::size_t j = 0;
    for (Eigen::Index t = 0; t < T; ++t) {
      while (s.dates[j] < dates[static_cast<std::size_t>(t)]) ++j;
      v(t) = s.values[j];
      if (!std::isfinite(v(t))) {
        throw InputError("assemble_panel: non-finite value at row " + std::to_string(t + 1) + " (" +
                         dates[static_cast<std::size_t>(t)].str() + "), column " + name);
      }
    }
    return v;
  };

  PanelDataset d;
  const auto N = static_cast<Eigen::Index>(in.units.size());
  const auto m = static_cast<Eigen::Index>(in.bc_covariate_names.size()) + 1;
  d.y.resize(T, N);
  for (Eigen::Index i = 0; i < N; ++i) {
    const UnitInput& u = in.units[static_cast<std::size_t>(i)];
    d.y.col(i) = aligned("y/" + u.label, u.y);
    Eigen::MatrixXd z(T, m);
    z.col(0).setOnes();
    for (Eigen::Index c = 1; c < m; ++c) {
      z.col(c) = aligned(u.label + "/" + in.bc_covariate_names[static_cast<std::size_t>(c - 1)], u.covariates[static_cast<std::size_t>(c - 1)]);
    }
    d.z_bc.push_back(std::move(z));
    d.unit_labels.push_back(u.label);
  }
  d.x = aligned("x", in.x);
  const auto mf = static_cast<Eigen::Index>(in.fc_covariate_names.size()) + 1;
  d.z_fc.resize(T, mf);
  d.z_fc.col(0).setOnes();
  for (Eigen::Index c = 1; c < mf; ++c) {
    d.z_fc.col(c) = aligned("FIN/" + in.fc_covariate_names[static_cast<std::size_t>(c - 1)], in.fc_covariates[static_cast<std::size_t>(c - 1)]);
  }
  d.bc_covariate_names.push_back("const");
  d.bc_covariate_names.insert(d.bc_covariate_names.end(), in.bc_covariate_names.begin(), in.bc_covariate_names.end());
  d.fc_covariate_names.push_back("const");
  d.fc_covariate_names.insert(d.fc_covariate_names.end(), in.fc_covariate_names.begin(), in.fc_covariate_names.end());
  d.dates = dates;
  d.validate();
  return d;
}

// ---------------------------------------------------------------------------

namespace {

Series sorted_series(std::vector<std::pair<YearMonth, double>> rows, Frequency f, const std::string& what)
{
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  Series s;
  s.frequency = f;
  for (const auto& [d, v] : rows) {
    if (!s.dates.empty() && s.dates.back() == d) throw InputError(what + ": duplicated date " + d.str());
    s.dates.push_back(d);
    s.values.push_back(v);
  }
  return s;
}

YearMonth parse_date(const std::string& text, const std::string& where)
{
  try {
    return YearMonth::parse(text);
  } catch (const InputError& e) {
    throw InputError(where + ": " + e.what());
  }
}

} // namespace

NamedSeries read_long_series(const fs::path& path, const std::string& key_column, const std::string& value_column)
{
  const CsvTable t = read_csv(path);
  const std::size_t cd = t.column("date");
  const std::size_t ck = t.column(key_column);
  const std::size_t cv = t.column(value_column);
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::pair<YearMonth, double>>> rows;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::string where = t.source + " line " + std::to_string(r + 2);
    const std::string& key = row[ck];
    if (key.empty()) throw InputError(where + ": empty " + key_column);
    if (!rows.count(key)) order.push_back(key);
    rows[key].emplace_back(parse_date(row[cd], where), parse_double(row[cv], where));
  }
  NamedSeries out;
  for (const auto& k : order) out.emplace_back(k, sorted_series(std::move(rows[k]), Frequency::kMonthly, t.source + " (" + k + ")"));
  return out;
}

NamedSeries read_wide_series(const fs::path& path, Frequency frequency)
{
  const CsvTable t = read_csv(path);
  const std::size_t cd = t.column("date");
  NamedSeries out;
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    if (c == cd) continue;
    std::vector<std::pair<YearMonth, double>> rows;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const std::string where = t.source + " line " + std::to_string(r + 2);
      rows.emplace_back(parse_date(t.rows[r][cd], where), parse_double(t.rows[r][c], where));
    }
    out.emplace_back(t.header[c], sorted_series(std::move(rows), frequency, t.source + " (" + t.header[c] + ")"));
  }
  return out;
}

Series read_single_series(const fs::path& path, Frequency frequency)
{
  const CsvTable t = read_csv(path);
  const std::size_t cd = t.column("date");
  const std::size_t cv = t.column("value");
  std::vector<std::pair<YearMonth, double>> rows;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::string where = t.source + " line " + std::to_string(r + 2);
    rows.emplace_back(parse_date(t.rows[r][cd], where), parse_double(t.rows[r][cv], where));
  }
  return sorted_series(std::move(rows), frequency, t.source);
}

namespace {

const Series* find_series(const NamedSeries& s, const std::string& key)
{
  for (const auto& [k, v] : s) {
    if (k == key) return &v;
  }
  return nullptr;
}

/// Covariate columns, with "spi" expanded by the transform.
struct CovariateBlock
{
  std::vector<std::string> names;
  std::vector<Series> series;
};

CovariateBlock expand_covariates(const std::vector<std::string>& columns, const std::function<Series(const std::string&)>& get,
                                 const SpiTransformSpec& spi)
{
  CovariateBlock b;
  for (const auto& c : columns) {
    if (c == "spi") {
      const std::vector<Series> parts = spi_transform(get(c), spi);
      const auto suffixes = spi.suffixes();
      for (std::size_t k = 0; k < parts.size(); ++k) {
        b.names.push_back("spi" + suffixes[k]);
        b.series.push_back(parts[k]);
      }
    } else {
      b.names.push_back(c);
      b.series.push_back(get(c));
    }
  }
  return b;
}

} // namespace

PanelDataset prepare_dataset(const PrepareOptions& opt)
{
  opt.spi.validate();
  const fs::path& dir = opt.input_dir;
  NamedSeries panel = read_long_series(dir / "panel.csv", "unit");
  if (panel.empty()) throw InputError((dir / "panel.csv").string() + ": no rows");

  if (!opt.backcast.empty()) {
    NamedSeries proxies;
    if (fs::exists(dir / "proxies.csv")) proxies = read_long_series(dir / "proxies.csv", "unit");
    for (const auto& [target, proxy] : opt.backcast) {
      Series* t = nullptr;
      for (auto& [k, v] : panel) {
        if (k == target) t = &v;
      }
      if (t == nullptr) throw InputError("backcast target '" + target + "' is not a unit of panel.csv");
      const Series* p = find_series(panel, proxy);
      if (p == nullptr) p = find_series(proxies, proxy);
      if (p == nullptr) throw InputError("backcast proxy '" + proxy + "' not found in panel.csv or proxies.csv");
      *t = backcast_missing(*p, *t);
    }
  }

  PanelInputs in;
  for (auto& [label, s] : panel) {
    UnitInput u;
    u.label = label;
    u.y = opt.panel_growth ? growth_rate(s) : s;
    in.units.push_back(std::move(u));
  }

  // Unit covariates.
  std::vector<std::string> cov_columns;
  if (fs::exists(dir / "covariates.csv")) {
    const CsvTable t = read_csv(dir / "covariates.csv");
    t.column("date");
    t.column("unit");
    if (opt.covariates.empty()) {
      for (const auto& h : t.header) {
        if (h != "date" && h != "unit") cov_columns.push_back(h);
      }
    } else {
      for (const auto& c : opt.covariates) {
        t.column(c);
        cov_columns.push_back(c);
      }
    }
    std::map<std::string, NamedSeries> by_column;
    for (const auto& c : cov_columns) by_column[c] = read_long_series(dir / "covariates.csv", "unit", c);
    for (auto& u : in.units) {
      auto get = [&](const std::string& c) -> Series {
        const Series* s = find_series(by_column[c], u.label);
        if (s == nullptr) throw InputError((dir / "covariates.csv").string() + ": no rows for unit " + u.label);
        return *s;
      };
      CovariateBlock b = expand_covariates(cov_columns, get, opt.spi);
      u.covariates = std::move(b.series);
      in.bc_covariate_names = b.names;
    }
  } else if (!opt.covariates.empty()) {
    throw InputError("covariates requested but " + (dir / "covariates.csv").string() + " is missing");
  }

  // Financial series.
  Series x;
  if (fs::exists(dir / "financial.csv")) {
    x = read_single_series(dir / "financial.csv");
  } else if (fs::exists(dir / "quarterly.csv")) {
    const Series q = read_single_series(dir / "quarterly.csv", Frequency::kQuarterly);
    if (!fs::exists(dir / "indicators.csv")) throw InputError("quarterly.csv requires indicators.csv");
    std::vector<Series> ind;
    for (auto& [name, s] : read_wide_series(dir / "indicators.csv")) ind.push_back(std::move(s));
    ChowLinOptions co;
    co.aggregation = opt.chow_lin_aggregation;
    x = chow_lin(q, ind, co).monthly;
  } else {
    throw InputError("need financial.csv or quarterly.csv in " + dir.string());
  }
  in.x = opt.financial_growth ? growth_rate(x) : x;

  // Financial covariates: explicit file, else the cross-country mean of the unit covariates.
  if (fs::exists(dir / "financial_covariates.csv")) {
    const NamedSeries wide = read_wide_series(dir / "financial_covariates.csv");
    std::vector<std::string> cols;
    if (opt.covariates.empty()) {
      for (const auto& [k, v] : wide) cols.push_back(k);
    } else {
      cols = opt.covariates;
    }
    auto get = [&](const std::string& c) -> Series {
      const Series* s = find_series(wide, c);
      if (s == nullptr) throw InputError((dir / "financial_covariates.csv").string() + ": missing column '" + c + "'");
      return *s;
    };
    CovariateBlock b = expand_covariates(cols, get, opt.spi);
    in.fc_covariate_names = b.names;
    in.fc_covariates = std::move(b.series);
  } else if (!in.bc_covariate_names.empty()) {
    in.fc_covariate_names = in.bc_covariate_names;
    for (std::size_t c = 0; c < in.bc_covariate_names.size(); ++c) {
      std::map<YearMonth, std::pair<double, int>> acc;
      for (const auto& u : in.units) {
        const Series& s = u.covariates[c];
        for (std::size_t k = 0; k < s.size(); ++k) {
          auto& a = acc[s.dates[k]];
          a.first += s.values[k];
          a.second += 1;
        }
      }
      Series mean;
      for (const auto& [d, a] : acc) {
        if (a.second != static_cast<int>(in.units.size())) continue;
        mean.dates.push_back(d);
        mean.values.push_back(a.first / a.second);
      }
      in.fc_covariates.push_back(std::move(mean));
    }
  }

  if (opt.start || opt.end) {
    for (auto& u : in.units) {
      u.y = trim(u.y, opt.start, opt.end);
      for (auto& c : u.covariates) c = trim(c, opt.start, opt.end);
    }
    in.x = trim(in.x, opt.start, opt.end);
    for (auto& c : in.fc_covariates) c = trim(c, opt.start, opt.end);
  }
  return assemble_panel(in);
}

} // namespace pms
