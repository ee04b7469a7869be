#pragma once

#include "pms/archive.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace pms {

/// Fraction of periods in which the two cycles share a regime.
double concordance(const Eigen::VectorXi& s_a, const Eigen::VectorXi& s_b);

/// Pairwise concordance of the columns of a T x C state matrix.
Eigen::MatrixXd concordance_matrix(const Eigen::MatrixXi& states);

/// Point estimate of a cycle from draws. kMode takes regime 2 when strictly
/// more than half the draws are in it; kMeanThreshold when the posterior
/// probability is at least 0.5. They differ only at exact ties.
enum class CycleEstimator { kMode, kMeanThreshold };
CycleEstimator parse_cycle_estimator(const std::string& name);

/// Sample quantile with linear interpolation between order statistics
/// (R type 7). `sorted` must be ascending and non-empty.
double quantile_sorted(const std::vector<double>& sorted, double prob);

struct ParamSummary
{
  std::string name;
  double mean, sd, q025, q500, q975;
};

struct CycleSummary
{
  std::vector<std::string> chains;
  std::vector<YearMonth> dates;
  Eigen::MatrixXd p_expansion; // T x C
  Eigen::MatrixXi map_state;   // T x C
};

struct PosteriorSummary
{
  std::vector<ParamSummary> params;
  CycleSummary cycles;
};

PosteriorSummary summarize(const DrawTable& draws, CycleEstimator estimator = CycleEstimator::kMode);

struct BayesFactorResult
{
  std::string model_a, model_b;
  double log_bf = 0.0; // log B(a, b), positive favours a
  double slope = 0.0;
  int iterations = 0;
  bool converged = false;
  bool separated = false;
};

/// Reverse logistic regression on pooled per-draw log-likelihoods: samples
/// of `b` are labelled 1, those of `a` 0, and logit P(label = 1) = alpha +
/// beta * loglik is fitted by IRLS (tolerance 1e-8, at most 100 iterations).
/// The intercept alpha, on the raw log-likelihood scale, is returned as
/// log B(a, b). The pair is fitted in a canonical order so that swapping the
/// inputs negates the result exactly.
BayesFactorResult log_bayes_factor(const Eigen::VectorXd& loglik_a, const Eigen::VectorXd& loglik_b);

struct ModelComparison
{
  std::vector<std::string> labels;
  Eigen::MatrixXd log_bf; // (r, c) = log B(r, c)
  std::vector<BayesFactorResult> fits;
};

/// Throws InputError when the runs were fitted to different datasets.
ModelComparison compare_models(const std::vector<DrawTable>& runs, const std::vector<std::string>& labels);

struct IdentificationScan
{
  long draws = 0;
  long checks = 0;
  long violations = 0;
  std::vector<std::string> examples; // first few violations
};

/// Checks the intercept ordering of every unit and the financial equation in
/// every draw.
IdentificationScan scan_identification(const DrawTable& draws);

void write_summary_csv(const std::filesystem::path& path, const PosteriorSummary& summary);
void write_cycles_csv(const std::filesystem::path& path, const CycleSummary& cycles);
void write_concordance_csv(const std::filesystem::path& path, const std::vector<std::string>& chains, const Eigen::MatrixXd& ci);
/// Matrix file plus `<stem>_fits.csv` with per-pair diagnostics.
void write_bayes_factors_csv(const std::filesystem::path& path, const ModelComparison& comparison);

} // namespace pms
