#pragma once

#include "pms/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace pms {

/// How the non-intercept covariate columns are produced.
struct CovariateGenerator
{
  enum class Kind
  {
    kConstant,
    kGaussian,
    kReplay,
  };
  Kind kind = Kind::kGaussian;
  double value = 0.0; // kConstant: every non-intercept entry
  double sd = 1.0;    // kGaussian: iid N(0, sd^2)
  // kReplay: per unit T x (m-1) blocks and a T x (m_f-1) financial block.
  std::vector<Eigen::MatrixXd> replay_bc;
  Eigen::MatrixXd replay_fc;

  static Kind parse_kind(const std::string& name);
  static std::string kind_name(Kind kind);
};

struct SimSpec
{
  Eigen::Index t_len = 0;
  Eigen::Index n_units = 0;
  ModelParams truth; // fixes m and m_f through the coefficient lengths
  CovariateGenerator covariates;
  std::uint64_t seed = 1;
  YearMonth start{2000, 1};
  std::vector<std::string> unit_labels; // default U1..UN

  void validate() const;
};

struct Simulation
{
  PanelDataset data;
  LatentStates states;
};

/// Forward simulation of the panel: uniform initial states, then each period
/// the financial chain and the units move using states at t-1.
Simulation simulate(const SimSpec& spec);

/// A symmetric, well separated parameter set used by tests and the CLI when no
/// truth file is given.
ModelParams default_truth(Eigen::Index n_units, Eigen::Index m, Eigen::Index m_f);

} // namespace pms
