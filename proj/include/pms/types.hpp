#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "pms/dates.hpp"

namespace pms {

/// Bad user input: malformed data, invalid parameters, inconsistent dimensions.
class InputError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Numerical breakdown (non-SPD matrix, non-finite intermediate results).
class NumericalError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

// Regime labels. 1 = recession, 2 = expansion.
inline constexpr int kRecession = 1;
inline constexpr int kExpansion = 2;

inline void require_regime(int k)
{
  if (k != kRecession && k != kExpansion) {
    throw InputError("regime label must be 1 or 2, got " + std::to_string(k));
  }
}

/// Identifies one Markov chain of the panel: a unit (business cycle) or the
/// common financial chain.
class Chain
{
public:
  static Chain unit(int i) { return Chain(i); }
  static Chain financial() { return Chain(-1); }

  bool is_financial() const { return index_ < 0; }
  int unit_index() const { return index_; }

  friend bool operator==(Chain, Chain) = default;

private:
  explicit Chain(int index) : index_(index) {}
  int index_;
};

struct PanelDataset
{
  Eigen::MatrixXd y;                 // T x N unit growth rates
  Eigen::VectorXd x;                 // T common financial growth
  std::vector<Eigen::MatrixXd> z_bc; // per unit, T x m; column 0 is the intercept
  Eigen::MatrixXd z_fc;              // T x m_f; column 0 is the intercept
  std::vector<std::string> unit_labels;
  std::vector<std::string> bc_covariate_names; // m names, first is "const"
  std::vector<std::string> fc_covariate_names; // m_f names, first is "const"
  std::vector<YearMonth> dates;

  Eigen::Index t_len() const { return y.rows(); }
  Eigen::Index n_units() const { return y.cols(); }
  Eigen::Index n_bc_covariates() const { return z_bc.empty() ? 0 : z_bc.front().cols(); }
  Eigen::Index n_fc_covariates() const { return z_fc.cols(); }

  /// Throws InputError naming the first violated invariant.
  void validate() const;
};

/// FNV-1a hash over dates, unit labels, y and x. Covariates are excluded so
/// that models differing only in covariates share a fingerprint.
std::string data_fingerprint(const PanelDataset& data);

struct ModelParams
{
  std::vector<std::array<Eigen::VectorXd, 2>> psi; // [unit][regime-1], length m
  Eigen::MatrixXd sigma;                           // N x 2
  std::array<Eigen::VectorXd, 2> phi;              // [regime-1], length m_f
  Eigen::Vector2d tau;
  std::vector<Eigen::Matrix2d> p_unit; // row = origin regime, col = destination
  Eigen::Matrix2d p_fin;
  std::vector<Eigen::Vector3d> interaction_unit; // (alpha, beta, gamma)
  Eigen::Vector3d interaction_fin;

  Eigen::Index n_units() const { return sigma.rows(); }

  const Eigen::Matrix2d& transition(Chain c) const
  {
    return c.is_financial() ? p_fin : p_unit[static_cast<std::size_t>(c.unit_index())];
  }
  const Eigen::Vector3d& interaction(Chain c) const
  {
    return c.is_financial() ? interaction_fin
                            : interaction_unit[static_cast<std::size_t>(c.unit_index())];
  }

  /// Checks scale positivity, simplex rows/triples and (optionally) the
  /// intercept ordering used for identification.
  void validate(bool check_identification = true) const;
  bool identified() const;
};

struct LatentStates
{
  Eigen::MatrixXi s_y; // T x N, entries in {1,2}
  Eigen::VectorXi s_x; // T, entries in {1,2}

  void validate() const;

  Eigen::Index t_len() const { return s_x.size(); }
};

/// Hyperparameters. Per-unit blocks are indexed [unit][regime-1].
struct PriorConfig
{
  std::vector<std::array<Eigen::VectorXd, 2>> psi_mean;
  std::vector<std::array<Eigen::MatrixXd, 2>> psi_cov;
  std::array<Eigen::VectorXd, 2> phi_mean;
  std::array<Eigen::MatrixXd, 2> phi_cov;
  Eigen::MatrixXd sigma_shape; // N x 2
  Eigen::MatrixXd sigma_rate;  // N x 2
  Eigen::Vector2d tau_shape;
  Eigen::Vector2d tau_rate;
  std::vector<Eigen::Vector2d> delta_unit;
  Eigen::Vector2d delta_fin;
  std::vector<Eigen::Vector3d> interaction_unit;
  Eigen::Vector3d interaction_fin;

  /// m = 0, covariance = coef_var * I, IG(shape, rate), delta = (1,1),
  /// interaction weights = (8,1,1) unless overridden.
  static PriorConfig defaults(Eigen::Index n_units,
                              Eigen::Index m,
                              Eigen::Index m_f,
                              double coef_var = 100.0,
                              double var_shape = 2.5,
                              double var_rate = 0.5,
                              const Eigen::Vector2d& delta = Eigen::Vector2d(1.0, 1.0),
                              const Eigen::Vector3d& interaction = Eigen::Vector3d(8.0, 1.0, 1.0));

  void validate(Eigen::Index n_units, Eigen::Index m, Eigen::Index m_f) const;
};

} // namespace pms
