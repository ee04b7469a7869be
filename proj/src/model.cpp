#include "pms/model.hpp"

#include <algorithm>

namespace pms {

Eigen::Vector2d transition_row(const Eigen::Matrix2d& p,
                               const Eigen::Vector3d& interaction,
                               int origin,
                               int s_x,
                               double m2)
{
  require_regime(origin);
  require_regime(s_x);
  if (!(m2 >= 0.0 && m2 <= 1.0)) throw InputError("transition_row: m2 must lie in [0,1]");
  const double shift = interaction(1) * static_cast<double>(s_x - 1);
  const Eigen::Vector2d m(1.0 - m2, m2);
  Eigen::Vector2d q;
  for (int k = 0; k < 2; ++k) {
    const double raw = interaction(0) * p(origin - 1, k) + shift + interaction(2) * m(k);
    q(k) = std::clamp(raw, kRowFloor, 1.0 - kRowFloor);
  }
  return q / q.sum();
}

Eigen::Vector2d transition_row(const ModelParams& params, Chain chain, int origin, int s_x, double m2)
{
  return transition_row(params.transition(chain), params.interaction(chain), origin, s_x, m2);
}

double emission_logpdf(const PanelDataset& data, const ModelParams& params, Chain chain, Eigen::Index t, int k)
{
  require_regime(k);
  if (t < 0 || t >= data.t_len()) throw InputError("emission_logpdf: time index out of range");
  const auto r = static_cast<std::size_t>(k - 1);
  if (chain.is_financial()) {
    const double sd = params.tau(k - 1);
    if (!(sd > 0.0)) throw InputError("emission_logpdf: tau must be positive");
    return normal_logpdf(data.x(t), data.z_fc.row(t).dot(params.phi[r]), sd);
  }
  const auto i = static_cast<std::size_t>(chain.unit_index());
  const double sd = params.sigma(chain.unit_index(), k - 1);
  if (!(sd > 0.0)) throw InputError("emission_logpdf: sigma must be positive");
  return normal_logpdf(data.y(t, chain.unit_index()), data.z_bc[i].row(t).dot(params.psi[i][r]), sd);
}

std::vector<TransitionEvent> transition_events(const LatentStates& states, Chain chain)
{
  std::vector<TransitionEvent> events;
  const Eigen::Index T = states.t_len();
  if (T < 2) return events;
  events.reserve(static_cast<std::size_t>(T - 1));
  for (Eigen::Index t = 1; t < T; ++t) {
    const int from = chain.is_financial() ? states.s_x(t - 1) : states.s_y(t - 1, chain.unit_index());
    const int to = chain.is_financial() ? states.s_x(t) : states.s_y(t, chain.unit_index());
    events.push_back({from, to, states.s_x(t - 1), global_factor(states.s_y.row(t - 1), kExpansion)});
  }
  return events;
}

double log_transition_product(const std::vector<TransitionEvent>& events,
                              const Eigen::Matrix2d& p,
                              const Eigen::Vector3d& interaction,
                              int origin_filter)
{
  double total = 0.0;
  for (const auto& e : events) {
    if (origin_filter != 0 && e.from != origin_filter) continue;
    const Eigen::Vector2d row = transition_row(p, interaction, e.from, e.s_x_prev, e.m2_prev);
    total += std::log(std::max(row(e.to - 1), kLogFloor));
  }
  return total;
}

namespace {

void check_dims(const PanelDataset& data, const ModelParams& params, const LatentStates& states)
{
  if (states.s_y.rows() != data.t_len() || states.s_y.cols() != data.n_units() || states.s_x.size() != data.t_len()) {
    throw InputError("complete_data_loglik: state dimensions do not match the dataset");
  }
  if (params.n_units() != data.n_units()) throw InputError("complete_data_loglik: parameter N does not match the dataset");
  for (const auto& pk : params.psi) {
    if (pk[0].size() != data.n_bc_covariates()) throw InputError("complete_data_loglik: psi length does not match m");
  }
  if (params.phi[0].size() != data.n_fc_covariates()) throw InputError("complete_data_loglik: phi length does not match m_f");
}

} // namespace

double emission_loglik(const PanelDataset& data, const ModelParams& params, const LatentStates& states)
{
  check_dims(data, params, states);
  double total = 0.0;
  for (Eigen::Index t = 0; t < data.t_len(); ++t) {
    for (Eigen::Index i = 0; i < data.n_units(); ++i) {
      total += emission_logpdf(data, params, Chain::unit(static_cast<int>(i)), t, states.s_y(t, i));
    }
    total += emission_logpdf(data, params, Chain::financial(), t, states.s_x(t));
  }
  return total;
}

double complete_data_loglik(const PanelDataset& data, const ModelParams& params, const LatentStates& states)
{
  states.validate();
  double total = emission_loglik(data, params, states);
  const auto n_chains = static_cast<double>(data.n_units() + 1);
  total += n_chains * std::log(0.5);
  for (Eigen::Index i = 0; i < data.n_units(); ++i) {
    const Chain c = Chain::unit(static_cast<int>(i));
    total += log_transition_product(transition_events(states, c), params.transition(c), params.interaction(c));
  }
  const Chain f = Chain::financial();
  total += log_transition_product(transition_events(states, f), params.transition(f), params.interaction(f));
  return total;
}

} // namespace pms
