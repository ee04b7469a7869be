#pragma once

#include "pms/types.hpp"

#include <cmath>
#include <vector>

namespace pms {

/// Entries of a transition row are clamped to [kRowFloor, 1 - kRowFloor]
/// before renormalisation.
inline constexpr double kRowFloor = 1e-10;

/// Smallest probability passed to log().
inline constexpr double kLogFloor = 1e-300;

/// Proportion of unit chains in regime k.
template <typename Derived>
double global_factor(const Eigen::DenseBase<Derived>& states_row, int k)
{
  require_regime(k);
  if (states_row.size() == 0) throw InputError("global_factor: empty state row");
  Eigen::Index count = 0;
  for (Eigen::Index j = 0; j < states_row.size(); ++j) {
    const int s = static_cast<int>(states_row(j));
    require_regime(s);
    count += (s == k);
  }
  return static_cast<double>(count) / static_cast<double>(states_row.size());
}

/// Time-varying transition row from origin regime `origin`:
///   q_k = alpha p_{origin,k} + beta (s_x - 1) + gamma m_k,  m = (1 - m2, m2),
/// clamped to [kRowFloor, 1 - kRowFloor] and renormalised.
Eigen::Vector2d transition_row(const Eigen::Matrix2d& p,
                               const Eigen::Vector3d& interaction,
                               int origin,
                               int s_x,
                               double m2);

Eigen::Vector2d transition_row(const ModelParams& params, Chain chain, int origin, int s_x, double m2);

/// Gaussian log density of the observation of `chain` at time t under regime k.
double emission_logpdf(const PanelDataset& data, const ModelParams& params, Chain chain, Eigen::Index t, int k);

inline double normal_logpdf(double value, double mean, double sd)
{
  constexpr double kHalfLog2Pi = 0.91893853320467274178;
  const double u = (value - mean) / sd;
  return -kHalfLog2Pi - std::log(sd) - 0.5 * u * u;
}

/// One observed move of a chain from t-1 to t together with the drivers of
/// its transition row (financial state and regime-2 share at t-1).
struct TransitionEvent
{
  int from;
  int to;
  int s_x_prev;
  double m2_prev;
};

std::vector<TransitionEvent> transition_events(const LatentStates& states, Chain chain);

/// Sum of log transition probabilities over `events` (restricted to events
/// leaving `origin_filter` when it is 1 or 2).
double log_transition_product(const std::vector<TransitionEvent>& events,
                              const Eigen::Matrix2d& p,
                              const Eigen::Vector3d& interaction,
                              int origin_filter = 0);

/// Complete-data log-likelihood: emissions, transitions, and a uniform
/// initial distribution for every chain.
double complete_data_loglik(const PanelDataset& data, const ModelParams& params, const LatentStates& states);

/// Emission part only (no transition or initial terms).
double emission_loglik(const PanelDataset& data, const ModelParams& params, const LatentStates& states);

} // namespace pms
