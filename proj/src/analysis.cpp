#include "pms/analysis.hpp"

#include <algorithm>
#include <cmath>

namespace pms {

double concordance(const Eigen::VectorXi& a, const Eigen::VectorXi& b)
{
  if (a.size() != b.size()) {
    throw InputError("concordance: lengths differ (" + std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  }
  if (a.size() == 0) throw InputError("concordance: empty state vectors");
  long both = 0;
  for (Eigen::Index t = 0; t < a.size(); ++t) {
    require_regime(a(t));
    require_regime(b(t));
    both += (a(t) - 1) * (b(t) - 1) + (2 - a(t)) * (2 - b(t));
  }
  return static_cast<double>(both) / static_cast<double>(a.size());
}

Eigen::MatrixXd concordance_matrix(const Eigen::MatrixXi& states)
{
  const Eigen::Index c = states.cols();
  Eigen::MatrixXd ci = Eigen::MatrixXd::Identity(c, c);
  for (Eigen::Index i = 0; i < c; ++i) {
    for (Eigen::Index j = i + 1; j < c; ++j) {
      ci(i, j) = ci(j, i) = concordance(states.col(i), states.col(j));
    }
  }
  return ci;
}

CycleEstimator parse_cycle_estimator(const std::string& name)
{
  if (name == "mode") return CycleEstimator::kMode;
  if (name == "mean_threshold") return CycleEstimator::kMeanThreshold;
  throw InputError("unknown cycle estimator '" + name + "' (expected mode or mean_threshold)");
}

double quantile_sorted(const std::vector<double>& x, double prob)
{
  if (x.empty()) throw InputError("quantile of an empty sample");
  const double h = (static_cast<double>(x.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= x.size()) return x.back();
  return x[lo] + (h - static_cast<double>(lo)) * (x[lo + 1] - x[lo]);
}

PosteriorSummary summarize(const DrawTable& draws, CycleEstimator estimator)
{
  const Eigen::Index n = draws.n_draws();
  if (n == 0) throw InputError("summarize: no draws");
  PosteriorSummary s;
  std::vector<double> col(static_cast<std::size_t>(n));
  for (std::size_t p = 0; p < draws.names.size(); ++p) {
    const auto c = static_cast<Eigen::Index>(p);
    for (Eigen::Index k = 0; k < n; ++k) col[static_cast<std::size_t>(k)] = draws.values(k, c);
    std::sort(col.begin(), col.end());
    const double mean = draws.values.col(c).mean();
    const double var = n > 1 ? (draws.values.col(c).array() - mean).square().sum() / static_cast<double>(n - 1) : 0.0;
    s.params.push_back({draws.names[p], mean, std::sqrt(var), quantile_sorted(col, 0.025), quantile_sorted(col, 0.5),
                        quantile_sorted(col, 0.975)});
  }

  CycleSummary& cy = s.cycles;
  cy.chains = draws.chains;
  cy.dates = draws.dates;
  if (!draws.states.empty()) {
    const Eigen::Index T = draws.states.front().rows();
    const Eigen::Index C = draws.states.front().cols();
    Eigen::MatrixXi count2 = Eigen::MatrixXi::Zero(T, C);
    for (const auto& st : draws.states) count2 += (st.array() == kExpansion).cast<int>().matrix();
    const auto ns = static_cast<int>(draws.states.size());
    cy.p_expansion = count2.cast<double>() / static_cast<double>(ns);
    cy.map_state.resize(T, C);
    for (Eigen::Index t = 0; t < T; ++t) {
      for (Eigen::Index c = 0; c < C; ++c) {
        const bool two = estimator == CycleEstimator::kMode ? 2 * count2(t, c) > ns : 2 * count2(t, c) >= ns;
        cy.map_state(t, c) = two ? kExpansion : kRecession;
      }
    }
  }
  return s;
}

// ---------------------------------------------------------------------------

namespace {

double log1pexp(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

BayesFactorResult reverse_logistic(const Eigen::VectorXd& a, const Eigen::VectorXd& b)
{
  const Eigen::Index na = a.size(), nb = b.size();
  Eigen::VectorXd x(na + nb), y(na + nb);
  x << a, b;
  y << Eigen::VectorXd::Zero(na), Eigen::VectorXd::Ones(nb);
  const double mu = x.mean();
  const double sd = std::sqrt((x.array() - mu).square().sum() / static_cast<double>(x.size()));

  BayesFactorResult r;
  if (!(sd > 0.0)) {
    // No slope is identifiable; the intercept is the label log-odds.
    r.log_bf = std::log(static_cast<double>(nb) / static_cast<double>(na));
    r.converged = true;
    return r;
  }
  const Eigen::VectorXd z = (x.array() - mu) / sd;
  r.separated = a.maxCoeff() < b.minCoeff() || b.maxCoeff() < a.minCoeff();

  // Newton-Raphson / IRLS on the standardised regressor, halving steps that
  // decrease the likelihood.
  Eigen::Vector2d theta(0.0, 0.0);
  auto loglik = [&](const Eigen::Vector2d& th) {
    double l = 0.0;
    for (Eigen::Index k = 0; k < z.size(); ++k) {
      const double eta = th(0) + th(1) * z(k);
      l += y(k) * eta - log1pexp(eta);
    }
    return l;
  };
  double current = loglik(theta);
  for (r.iterations = 1; r.iterations <= 100; ++r.iterations) {
    Eigen::Matrix2d info = Eigen::Matrix2d::Zero();
    Eigen::Vector2d score = Eigen::Vector2d::Zero();
    for (Eigen::Index k = 0; k < z.size(); ++k) {
      const double eta = theta(0) + theta(1) * z(k);
      const double p = 1.0 / (1.0 + std::exp(-eta));
      const double w = p * (1.0 - p);
      const Eigen::Vector2d row(1.0, z(k));
      score += (y(k) - p) * row;
      info += w * row * row.transpose();
    }
    Eigen::LDLT<Eigen::Matrix2d> ldlt(info);
    if (ldlt.info() != Eigen::Success || !(info.determinant() > 1e-300)) {
      r.separated = true;
      break;
    }
    Eigen::Vector2d step = ldlt.solve(score);
    double scale = 1.0;
    Eigen::Vector2d next = theta + step;
    double l = loglik(next);
    while (l < current - 1e-12 && scale > 1e-6) {
      scale *= 0.5;
      next = theta + scale * step;
      l = loglik(next);
    }
    const double change = (next - theta).cwiseAbs().maxCoeff();
    theta = next;
    current = l;
    if (!std::isfinite(theta(0)) || !std::isfinite(theta(1))) break;
    if (change < 1e-8) {
      r.converged = true;
      break;
    }
  }
  r.iterations = std::min(r.iterations, 100);
  r.slope = theta(1) / sd;
  r.log_bf = theta(0) - theta(1) * mu / sd;
  if (r.separated) r.converged = false;
  return r;
}

bool canonical_before(const Eigen::VectorXd& a, const Eigen::VectorXd& b)
{
  if (a.size() != b.size()) return a.size() < b.size();
  return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

} // namespace

BayesFactorResult log_bayes_factor(const Eigen::VectorXd& a, const Eigen::VectorXd& b)
{
  if (a.size() < 2 || b.size() < 2) throw InputError("log_bayes_factor: need at least two draws per model");
  if (!a.allFinite() || !b.allFinite()) throw InputError("log_bayes_factor: non-finite log-likelihood");
  if (a.size() == b.size() && a == b) {
    BayesFactorResult r;
    r.converged = true;
    return r;
  }
  if (canonical_before(a, b)) return reverse_logistic(a, b);
  BayesFactorResult r = reverse_logistic(b, a);
  r.log_bf = -r.log_bf;
  r.slope = -r.slope;
  return r;
}

ModelComparison compare_models(const std::vector<DrawTable>& runs, const std::vector<std::string>& labels)
{
  if (runs.size() != labels.size()) throw InputError("compare_models: labels do not match runs");
  if (runs.size() < 2) throw InputError("compare_models: need at least two runs");
  for (std::size_t r = 1; r < runs.size(); ++r) {
    if (runs[r].fingerprint != runs[0].fingerprint) {
      throw InputError("dataset fingerprints differ: " + labels[0] + " has " + runs[0].fingerprint + ", " + labels[r] + " has " +
                       runs[r].fingerprint);
    }
  }
  ModelComparison mc;
  mc.labels = labels;
  const auto n = static_cast<Eigen::Index>(runs.size());
  mc.log_bf = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      BayesFactorResult f = log_bayes_factor(runs[static_cast<std::size_t>(i)].loglik, runs[static_cast<std::size_t>(j)].loglik);
      f.model_a = labels[static_cast<std::size_t>(i)];
      f.model_b = labels[static_cast<std::size_t>(j)];
      mc.log_bf(i, j) = f.log_bf;
      mc.log_bf(j, i) = -f.log_bf;
      mc.fits.push_back(f);
    }
  }
  return mc;
}

IdentificationScan scan_identification(const DrawTable& draws)
{
  std::vector<std::pair<std::string, std::pair<Eigen::Index, Eigen::Index>>> pairs;
  for (std::size_t c = 0; c + 1 < draws.chains.size(); ++c) {
    const std::string& u = draws.chains[c];
    pairs.push_back({u, {draws.column("psi/" + u + "/1/const"), draws.column("psi/" + u + "/2/const")}});
  }
  pairs.push_back({"financial", {draws.column("phi/1/const"), draws.column("phi/2/const")}});
  IdentificationScan scan;
  scan.draws = draws.n_draws();
  for (Eigen::Index k = 0; k < draws.n_draws(); ++k) {
    for (const auto& [who, cols] : pairs) {
      ++scan.checks;
      if (!(draws.values(k, cols.first) <= draws.values(k, cols.second))) {
        ++scan.violations;
        if (scan.examples.size() < 10) {
          scan.examples.push_back("iteration " + std::to_string(draws.iterations[static_cast<std::size_t>(k)]) + ", " + who);
        }
      }
    }
  }
  return scan;
}

// ---------------------------------------------------------------------------

void write_summary_csv(const std::filesystem::path& path, const PosteriorSummary& s)
{
  std::string out = "parameter,mean,sd,q025,q500,q975\n";
  for (const auto& p : s.params) {
    out += p.name + "," + format_double(p.mean) + "," + format_double(p.sd) + "," + format_double(p.q025) + "," +
           format_double(p.q500) + "," + format_double(p.q975) + "\n";
  }
  write_text(path, out);
}

void write_cycles_csv(const std::filesystem::path& path, const CycleSummary& c)
{
  std::string out = "date,chain,p_expansion,map_state\n";
  for (Eigen::Index j = 0; j < c.p_expansion.cols(); ++j) {
    for (Eigen::Index t = 0; t < c.p_expansion.rows(); ++t) {
      out += c.dates[static_cast<std::size_t>(t)].str() + "," + c.chains[static_cast<std::size_t>(j)] + "," +
             format_double(c.p_expansion(t, j)) + "," + std::to_string(c.map_state(t, j)) + "\n";
    }
  }
  write_text(path, out);
}

void write_concordance_csv(const std::filesystem::path& path, const std::vector<std::string>& chains, const Eigen::MatrixXd& ci)
{
  std::string out = "chain";
  for (const auto& c : chains) out += "," + c;
  out += "\n";
  for (Eigen::Index i = 0; i < ci.rows(); ++i) {
    out += chains[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < ci.cols(); ++j) out += "," + format_double(ci(i, j));
    out += "\n";
  }
  write_text(path, out);
}

void write_bayes_factors_csv(const std::filesystem::path& path, const ModelComparison& mc)
{
  std::string out = "model";
  for (const auto& l : mc.labels) out += "," + l;
  out += "\n";
  for (Eigen::Index i = 0; i < mc.log_bf.rows(); ++i) {
    out += mc.labels[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < mc.log_bf.cols(); ++j) out += "," + format_double(mc.log_bf(i, j));
    out += "\n";
  }
  write_text(path, out);

  std::string fits = "model_a,model_b,log_bf,slope,iterations,converged,separated\n";
  for (const auto& f : mc.fits) {
    fits += f.model_a + "," + f.model_b + "," + format_double(f.log_bf) + "," + format_double(f.slope) + "," +
            std::to_string(f.iterations) + "," + (f.converged ? "true" : "false") + "," + (f.separated ? "true" : "false") + "\n";
  }
  std::filesystem::path fp = path;
  fp.replace_filename(path.stem().string() + "_fits.csv");
  write_text(fp, fits);
}

} // namespace pms
